//! The `.germ` text format: a Jordan matrix followed by a polynomial map.
//!
//! ```text
//! # a two-block example
//! matrix {
//!   block { size = 1, order = 2, power = 1 }
//!   block { size = 1, order = 3, power = 1 }
//! }
//! map {
//!   f1 = L1*x1 + x1^3 + x1*x2^3;
//!   f2 = L2*x2 + x2^4 + 2*x2*x1^2;
//! }
//! ```
//!
//! A term is a `*`-separated product of atoms with an optional sign. Atoms are
//! integers, rationals `p/q`, roots of unity `w(d,r)`, block eigenvalues `Lj`
//! and variables `xi`; the last three take an optional `^e`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{root_of_unity, BigRational, CyclotomicNumber};
use crate::jordan::{JordanBlock, JordanSpec};
use crate::multipoly::{GermMap, Monomial, Polynomial};

/// A parsed `.germ` file.
#[derive(Clone, Debug)]
pub struct GermDocument {
    pub matrix: JordanSpec,
    pub map: GermMap,
    /// Line and column of each coordinate's definition, if parsed from text.
    pub spans: Vec<Option<(usize, usize)>>,
}

impl GermDocument {
    pub fn new(matrix: JordanSpec, map: GermMap) -> Result<Self> {
        if map.nvars() != matrix.dim() {
            return Err(Error::domain(format!(
                "map has {} coordinates but the matrix has dimension {}",
                map.nvars(),
                matrix.dim()
            )));
        }
        if map.modulus() != matrix.modulus() {
            return Err(Error::domain("map coefficients are not over Q(ζ_M) for M = M(Λ)"));
        }
        let n = map.nvars();
        Ok(GermDocument {
            matrix,
            map,
            spans: vec![None; n],
        })
    }
}

impl PartialEq for GermDocument {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.map == other.map
    }
}

impl Eq for GermDocument {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(u8),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, cl) = (line, col);
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            chars.next();
            col += 1;
        } else if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                chars.next();
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek().filter(|c| c.is_ascii_alphanumeric() || **c == '_') {
                s.push(c);
                chars.next();
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), line: l, column: cl });
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek().filter(|c| c.is_ascii_digit()) {
                s.push(c);
                chars.next();
                col += 1;
            }
            out.push(Token { tok: Tok::Int(s.parse().unwrap()), line: l, column: cl });
        } else if "{}()=,;+-*/^".contains(c) {
            chars.next();
            col += 1;
            out.push(Token { tok: Tok::Sym(c as u8), line: l, column: cl });
        } else {
            return Err(Error::Parse {
                line: l,
                column: cl,
                message: format!("unexpected character {c:?}"),
            });
        }
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(i) => format!("'{i}'"),
        Tok::Sym(c) => format!("'{}'", *c as char),
        Tok::Eof => "end of input".into(),
    }
}

/// Splits `x12` into `("x", 12)`.
fn indexed_name(s: &str) -> Option<(&str, &str)> {
    let split = s.find(|c: char| c.is_ascii_digit())?;
    let (head, tail) = s.split_at(split);
    (!head.is_empty() && tail.bytes().all(|b| b.is_ascii_digit())).then_some((head, tail))
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(t: &Token, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: t.line,
            column: t.column,
            message: msg.into(),
        }
    }

    fn err_here(&self, msg: impl Into<String>) -> Error {
        Self::err_at(self.peek(), msg)
    }

    fn expect_sym(&mut self, c: u8) -> Result<()> {
        if self.peek().tok == Tok::Sym(c) {
            self.next();
            Ok(())
        } else {
            Err(self.err_here(format!(
                "expected '{}', found {}",
                c as char,
                describe(&self.peek().tok)
            )))
        }
    }

    fn eat_sym(&mut self, c: u8) -> bool {
        if self.peek().tok == Tok::Sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            t => Err(self.err_here(format!("expected '{kw}', found {}", describe(t)))),
        }
    }

    fn int(&mut self) -> Result<(BigInt, Token)> {
        let t = self.next();
        match &t.tok {
            Tok::Int(i) => Ok((i.clone(), t)),
            other => Err(Self::err_at(&t, format!("expected an integer, found {}", describe(other)))),
        }
    }

    fn small_int(&mut self) -> Result<u32> {
        let (i, t) = self.int()?;
        u32::try_from(&i).map_err(|_| Self::err_at(&t, "integer does not fit in 32 bits"))
    }

    fn matrix(&mut self) -> Result<JordanSpec> {
        self.expect_keyword("matrix")?;
        self.expect_sym(b'{')?;
        let mut blocks = Vec::new();
        while !self.eat_sym(b'}') {
            let start = self.peek().clone();
            self.expect_keyword("block")?;
            self.expect_sym(b'{')?;
            let mut fields = [None; 3];
            const NAMES: [&str; 3] = ["size", "order", "power"];
            for i in 0..3 {
                if i > 0 {
                    self.expect_sym(b',')?;
                }
                let t = self.next();
                let idx = match &t.tok {
                    Tok::Ident(s) => NAMES.iter().position(|n| n == s),
                    _ => None,
                }
                .ok_or_else(|| {
                    Self::err_at(&t, format!("expected size, order or power, found {}", describe(&t.tok)))
                })?;
                if fields[idx].is_some() {
                    return Err(Self::err_at(&t, format!("duplicate field '{}'", NAMES[idx])));
                }
                self.expect_sym(b'=')?;
                fields[idx] = Some(self.small_int()?);
            }
            self.expect_sym(b'}')?;
            let [k, d, r] = fields.map(Option::unwrap);
            blocks.push(JordanBlock::new(k, d, r).map_err(|e| Self::err_at(&start, e.to_string()))?);
        }
        if blocks.is_empty() {
            return Err(self.err_here("matrix needs at least one block"));
        }
        JordanSpec::new(blocks).map_err(|e| self.err_here(e.to_string()))
    }

    fn exponent(&mut self) -> Result<u32> {
        if self.eat_sym(b'^') {
            self.small_int()
        } else {
            Ok(1)
        }
    }

    fn index(&self, t: &Token, digits: &str, bound: usize, what: &str) -> Result<usize> {
        match digits.parse::<usize>() {
            Ok(i) if (1..=bound).contains(&i) => Ok(i - 1),
            _ => Err(Self::err_at(t, format!("{what} index {digits} out of range 1..={bound}"))),
        }
    }

    /// One product term, without its sign.
    fn term(&mut self, spec: &JordanSpec) -> Result<(Monomial, CyclotomicNumber)> {
        let n = spec.dim();
        let m = spec.modulus();
        let mut exps = vec![0u32; n];
        let mut coeff = CyclotomicNumber::one(m);
        loop {
            let t = self.next();
            match &t.tok {
                Tok::Int(p) => {
                    let mut v = BigRational::from_integer(p.clone());
                    if self.eat_sym(b'/') {
                        let (q, qt) = self.int()?;
                        if q.is_zero() {
                            return Err(Self::err_at(&qt, "zero denominator"));
                        }
                        v = BigRational::new(p.clone(), q);
                    }
                    coeff = coeff.scale(&v);
                }
                Tok::Ident(s) if s == "w" => {
                    self.expect_sym(b'(')?;
                    let (d, dt) = self.int()?;
                    self.expect_sym(b',')?;
                    let (r, _) = self.int()?;
                    self.expect_sym(b')')?;
                    let e = self.exponent()?;
                    let d = u32::try_from(&d)
                        .ok()
                        .filter(|&d| d >= 1 && m % d == 0)
                        .ok_or_else(|| {
                            Self::err_at(&dt, format!("w({d},…) needs an order dividing M = {m}"))
                        })?;
                    let rr = (r * BigInt::from(e)) % BigInt::from(d);
                    let rr = i64::try_from(&rr).unwrap();
                    coeff = &coeff * &root_of_unity(d, rr, m).unwrap();
                }
                Tok::Ident(s) => match indexed_name(s) {
                    Some(("x", digits)) => {
                        let j = self.index(&t, digits, n, "variable")?;
                        let e = self.exponent()?;
                        exps[j] = exps[j]
                            .checked_add(e)
                            .ok_or_else(|| Self::err_at(&t, "exponent overflow"))?;
                    }
                    Some(("L", digits)) => {
                        let j = self.index(&t, digits, spec.num_blocks(), "eigenvalue")?;
                        let e = self.exponent()?;
                        let b = spec.blocks()[j];
                        let rr = (b.power as u64 * e as u64) % b.order as u64;
                        coeff = &coeff * &root_of_unity(b.order, rr as i64, m).unwrap();
                    }
                    _ => return Err(Self::err_at(&t, format!("unknown atom '{s}'"))),
                },
                other => {
                    return Err(Self::err_at(&t, format!("expected a factor, found {}", describe(other))))
                }
            }
            if !self.eat_sym(b'*') {
                break;
            }
        }
        Ok((Monomial::new(exps), coeff))
    }

    fn expr(&mut self, spec: &JordanSpec) -> Result<Polynomial> {
        let mut p = Polynomial::zero(spec.dim(), spec.modulus());
        let mut negate = self.eat_sym(b'-');
        if !negate {
            self.eat_sym(b'+');
        }
        loop {
            let (mono, c) = self.term(spec)?;
            p.add_term(mono, if negate { -&c } else { c });
            if self.eat_sym(b'+') {
                negate = false;
            } else if self.eat_sym(b'-') {
                negate = true;
            } else {
                return Ok(p);
            }
        }
    }

    fn map(&mut self, spec: &JordanSpec) -> Result<(GermMap, Vec<Option<(usize, usize)>>)> {
        let n = spec.dim();
        self.expect_keyword("map")?;
        self.expect_sym(b'{')?;
        let mut coords: Vec<Option<Polynomial>> = vec![None; n];
        let mut spans = vec![None; n];
        while !self.eat_sym(b'}') {
            let t = self.next();
            let i = match &t.tok {
                Tok::Ident(s) => match indexed_name(s) {
                    Some(("f", digits)) => self.index(&t, digits, n, "coordinate")?,
                    _ => return Err(Self::err_at(&t, format!("expected a coordinate name f1..f{n}"))),
                },
                other => {
                    return Err(Self::err_at(&t, format!("expected a coordinate name, found {}", describe(other))))
                }
            };
            if coords[i].is_some() {
                return Err(Self::err_at(&t, format!("duplicate coordinate f{}", i + 1)));
            }
            self.expect_sym(b'=')?;
            let p = self.expr(spec)?;
            if p.constant_term().is_some() {
                return Err(Self::err_at(&t, format!("coordinate f{} has a nonzero constant term", i + 1)));
            }
            self.expect_sym(b';')?;
            coords[i] = Some(p);
            spans[i] = Some((t.line, t.column));
        }
        let close = self.toks[self.pos.saturating_sub(1)].clone();
        let coords = coords
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| Self::err_at(&close, format!("missing coordinate f{}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        let map = GermMap::new(coords, spec.modulus()).map_err(|e| Self::err_at(&close, e.to_string()))?;
        Ok((map, spans))
    }
}

/// Parses a `.germ` document.
pub fn parse_germ(text: &str) -> Result<GermDocument> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let matrix = p.matrix()?;
    let (map, spans) = p.map(&matrix)?;
    if p.peek().tok != Tok::Eof {
        return Err(p.err_here("trailing input after map block"));
    }
    Ok(GermDocument { matrix, map, spans })
}

fn write_rational(out: &mut String, v: &BigRational) {
    if v.is_integer() {
        write!(out, "{}", v.numer()).unwrap();
    } else {
        write!(out, "{}/{}", v.numer(), v.denom()).unwrap();
    }
}

/// Renders a polynomial in the term syntax.
pub fn format_polynomial(p: &Polynomial) -> String {
    let mut out = String::new();
    let m = p.modulus();
    for (mono, c) in p.terms() {
        for (k, a) in c.coeffs().iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let neg = a.is_negative();
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let abs = a.abs();
            let mut factors: Vec<String> = Vec::new();
            if !abs.is_one() || (k == 0 && mono.is_one()) {
                let mut s = String::new();
                write_rational(&mut s, &abs);
                factors.push(s);
            }
            if k == 1 {
                factors.push(format!("w({m},1)"));
            } else if k > 1 {
                factors.push(format!("w({m},1)^{k}"));
            }
            for (j, &e) in mono.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{}", j + 1)),
                    _ => factors.push(format!("x{}^{e}", j + 1)),
                }
            }
            if factors.is_empty() {
                factors.push("1".into());
            }
            out.push_str(&factors.join("*"));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Canonical text of a document.
pub fn print_germ(doc: &GermDocument) -> String {
    let mut out = String::from("matrix {\n");
    for b in doc.matrix.blocks() {
        writeln!(
            out,
            "  block {{ size = {}, order = {}, power = {} }}",
            b.size, b.order, b.power
        )
        .unwrap();
    }
    out.push_str("}\nmap {\n");
    for (i, p) in doc.map.coords().iter().enumerate() {
        writeln!(out, "  f{} = {};", i + 1, format_polynomial(p)).unwrap();
    }
    out.push_str("}\n");
    out
}
