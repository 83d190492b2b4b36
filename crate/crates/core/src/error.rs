use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Quotient dimensions did not stabilize below the degree cap. Either the
    /// zero is not isolated or the cap is too small.
    #[error("origin not shown isolated within degree cap {cap}{}", witness_suffix(.witness))]
    NotIsolatedWithinBound { cap: u32, witness: Option<String> },

    #[error("term count exceeded limit {limit} during {context}")]
    TermExplosion { limit: usize, context: String },

    /// An identity the theory guarantees failed; always an engine bug.
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

fn witness_suffix(w: &Option<String>) -> String {
    match w {
        Some(w) => format!("; {w}"),
        None => String::new(),
    }
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
