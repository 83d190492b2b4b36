mod output;
mod suite;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use orbitdex::germlang::{parse_germ, print_germ, GermDocument};
use orbitdex::jordan::{is_admissible, order_leq, JordanSpec, SequenceTarget, WordMask};
use orbitdex::localmult::{multiplicity, DEFAULT_DEGREE_CAP};
use orbitdex::orbits::{fixed_point_index, orbit_spectrum, Route, SpectrumOptions, DEFAULT_DIRECT_CAP};
use orbitdex::resonance::{project, tau, validate_rnf};
use orbitdex::universality::{is_universal, pairwise_coprime, realize, residue_search};
use orbitdex::Error;
use serde_json::{json, Value};

use output::{int, join, spectrum_json, spectrum_table};

/// Fixed-point indices and hidden periodic orbits of resonant germs.
#[derive(Parser)]
#[command(name = "orbitdex", version)]
struct Cli {
    /// Print machine-readable JSON
    #[arg(long, global = true)]
    json: bool,
    /// Largest truncation degree tried before giving up on isolation
    #[arg(long, global = true, default_value_t = DEFAULT_DEGREE_CAP)]
    degree_cap: u32,
    /// Omit elapsed time from the output
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the normal form and test that all iterates have isolated fixed points
    Check { file: PathBuf },
    /// Zero multiplicity of f − id, or of f itself with --map-only
    Mult {
        file: PathBuf,
        #[arg(long)]
        map_only: bool,
    },
    /// Fixed-point index of the q-th iterate
    Index {
        file: PathBuf,
        #[arg(long)]
        q: u64,
        #[arg(long, value_enum, default_value_t = RouteArg::Projection)]
        route: RouteArg,
    },
    /// Indices, Dold indices and hidden orbit counts for every period
    Spectrum {
        file: PathBuf,
        #[arg(long)]
        no_cross_check: bool,
        /// Largest iterate recomputed by direct composition
        #[arg(long, default_value_t = DEFAULT_DIRECT_CAP)]
        direct_cap: u64,
    },
    /// Questions about the linear part alone
    Matrix {
        #[command(subcommand)]
        command: MatrixCommand,
    },
    /// Test a target sequence against the forced zeros and positivity pattern
    Admissible {
        matrix: String,
        #[arg(long)]
        seq: String,
    },
    /// Build and verify a germ with the given hidden orbit counts
    Realize {
        matrix: String,
        #[arg(long)]
        seq: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Minimal residue product search
    Lemma42 {
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<u64>,
    },
    /// Regression suite over the bundled fixtures and worked examples
    PaperSuite {
        /// Run only checks whose name contains this string
        #[arg(long)]
        filter: Option<String>,
        /// Rewrite the expected spectra from the current results
        #[arg(long)]
        bless: bool,
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MatrixCommand {
    /// Periods of the linear map
    Pe { matrix: String },
    /// Whether the first matrix is below the second in the block order
    Order { smaller: String, larger: String },
    /// Universality decision with witness ordering
    Universal { matrix: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Projection,
    Direct,
    Both,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Route {
        match r {
            RouteArg::Projection => Route::Projection,
            RouteArg::Direct => Route::Direct,
            RouteArg::Both => Route::BothAgree,
        }
    }
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => Failure::Usage(e.to_string()),
            e => Failure::Domain(e.to_string()),
        }
    }
}

struct Outcome {
    text: String,
    json: Value,
    ok: bool,
}

impl Outcome {
    fn ok(text: impl Into<String>, json: Value) -> Self {
        Outcome { text: text.into(), json, ok: true }
    }
}

fn load(path: &Path) -> Result<GermDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_germ(&text).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))
}

fn matrix(text: &str) -> Result<JordanSpec, Failure> {
    JordanSpec::parse_inline(text).map_err(|e| Failure::Usage(e.to_string()))
}

fn target(text: &str) -> Result<SequenceTarget, Failure> {
    SequenceTarget::parse(text).map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let cap = cli.degree_cap;
    match &cli.command {
        Command::Check { file } => check(&load(file)?, cap),
        Command::Mult { file, map_only } => {
            let doc = load(file)?;
            let g = if *map_only { doc.map.clone() } else { doc.map.minus_identity() };
            let r = multiplicity(&g, cap)?;
            let mut js = serde_json::to_value(&r).expect("serializable");
            js["value"] = int(r.value);
            Ok(Outcome::ok(r.value.to_string(), js))
        }
        Command::Index { file, q, route } => {
            let doc = load(file)?;
            let mu = fixed_point_index(&doc.matrix, &doc.map, *q, (*route).into(), cap)?;
            let name = serde_json::to_value(Route::from(*route)).expect("serializable");
            Ok(Outcome::ok(mu.to_string(), json!({ "q": int(*q), "route": name, "mu": int(mu) })))
        }
        Command::Spectrum { file, no_cross_check, direct_cap } => {
            let doc = load(file)?;
            let opts = SpectrumOptions {
                cross_check: !no_cross_check,
                direct_cap: *direct_cap,
                degree_cap: cap,
            };
            let s = orbit_spectrum(&doc.matrix, &doc.map, opts)?;
            Ok(Outcome::ok(spectrum_table(&s), spectrum_json(&s, true)))
        }
        Command::Matrix { command } => matrix_command(command),
        Command::Admissible { matrix: m, seq } => {
            let (spec, t) = (matrix(m)?, target(seq)?);
            let a = is_admissible(&spec, &t);
            let text = match &a.violation {
                None => format!("admissible: {}", SequenceTarget::new(t.completed(&spec))),
                Some(v) => format!("not admissible: {v}"),
            };
            Ok(Outcome {
                text,
                json: json!({ "admissible": a.admissible, "violation": a.violation }),
                ok: a.admissible,
            })
        }
        Command::Realize { matrix: m, seq, output } => {
            let (spec, t) = (matrix(m)?, target(seq)?);
            let doc = realize(&spec, &t)?;
            let germ = print_germ(&doc);
            let counts = output::int_map(&t.completed(&spec));
            let text = match output {
                Some(path) => {
                    fs::write(path, &germ).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                    format!("wrote {} (verified)", path.display())
                }
                None => germ.trim_end().to_string(),
            };
            Ok(Outcome::ok(text, json!({ "germ": germ, "counts": counts, "verified": true })))
        }
        Command::Lemma42 { a, r } => {
            let w = residue_search(a, r)?;
            let strict = w.product < w.bound;
            let text = format!(
                "k = {}, residues ({}), product {} {} {} = prod(a)/lcm(a)",
                w.k,
                join(&w.residues),
                w.product,
                if strict { "<" } else { "<=" },
                w.bound
            );
            let js = json!({
                "k": int(w.k),
                "residues": w.residues.iter().map(|&x| int(x)).collect::<Vec<_>>(),
                "product": int(w.product),
                "bound": int(w.bound),
                "strict": strict,
                "pairwise_coprime": pairwise_coprime(a),
            });
            Ok(Outcome::ok(text, js))
        }
        Command::PaperSuite { filter, bless, fixtures } => {
            let dir = fixtures.clone().unwrap_or_else(suite::default_fixture_dir);
            let report = suite::run(&dir, filter.as_deref(), *bless, !cli.no_timing, cap).map_err(Failure::Usage)?;
            Ok(Outcome {
                text: report.table(),
                json: report.json(),
                ok: report.all_passed(),
            })
        }
    }
}

fn check(doc: &GermDocument, cap: u32) -> Result<Outcome, Failure> {
    let verdict = validate_rnf(&doc.matrix, &doc.map);
    if !verdict.ok {
        let lines: Vec<String> = verdict.violations.iter().map(|v| format!("  {v}")).collect();
        return Ok(Outcome {
            text: format!("not in resonant normal form:\n{}", lines.join("\n")),
            json: json!({ "rnf": verdict, "isolated": Value::Null }),
            ok: false,
        });
    }
    let tf = tau(&doc.matrix, &doc.map)?;
    let full = project(&tf, &WordMask::all_ones(doc.matrix.dim()));
    match multiplicity(&full, cap) {
        Ok(r) => Ok(Outcome::ok(
            format!("OK: resonant normal form; every iterate has an isolated fixed point (pi(tau f) = {})", r.value),
            json!({ "rnf": verdict, "isolated": true, "multiplicity": int(r.value) }),
        )),
        Err(e @ Error::NotIsolatedWithinBound { .. }) => Ok(Outcome {
            text: format!("NotIsolated: {e}"),
            json: json!({ "rnf": verdict, "isolated": false, "diagnostic": e.to_string() }),
            ok: false,
        }),
        Err(e) => Err(e.into()),
    }
}

fn matrix_command(command: &MatrixCommand) -> Result<Outcome, Failure> {
    match command {
        MatrixCommand::Pe { matrix: m } => {
            let pe: Vec<u64> = matrix(m)?.period_set().into_iter().collect();
            Ok(Outcome::ok(
                format!("{{{}}}", join(&pe)),
                json!({ "pe": pe.iter().map(|&q| int(q)).collect::<Vec<_>>() }),
            ))
        }
        MatrixCommand::Order { smaller, larger } => {
            let leq = order_leq(&matrix(smaller)?, &matrix(larger)?);
            Ok(Outcome::ok(leq.to_string(), json!({ "leq": leq })))
        }
        MatrixCommand::Universal { matrix: m } => {
            let spec = matrix(m)?;
            let v = is_universal(&spec);
            let text = if v.universal {
                let order: Vec<String> = v
                    .ordering
                    .iter()
                    .map(|&i| {
                        let b = spec.blocks()[i];
                        format!("({},{},{})", b.size, b.order, b.power)
                    })
                    .collect();
                format!("universal ({}): {}", serde_json::to_value(v.mode).unwrap().as_str().unwrap(), order.join(", "))
            } else {
                format!("not universal: {}", v.failure_reason.clone().unwrap_or_default())
            };
            Ok(Outcome::ok(text, serde_json::to_value(&v).expect("serializable")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(&cli);
    let elapsed = start.elapsed();
    match result {
        Ok(mut out) => {
            if cli.json {
                if !cli.no_timing {
                    if let Value::Object(m) = &mut out.json {
                        m.insert("elapsed_ms".into(), json!(elapsed.as_millis() as u64));
                    }
                }
                println!("{}", serde_json::to_string_pretty(&out.json).expect("serializable"));
            } else {
                println!("{}", out.text);
                if !cli.no_timing {
                    eprintln!("({:.3} s)", elapsed.as_secs_f64());
                }
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            report_error(&cli, "usage", &msg);
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            report_error(&cli, "domain", &msg);
            ExitCode::from(1)
        }
    }
}

fn report_error(cli: &Cli, kind: &str, msg: &str) {
    if cli.json {
        println!("{}", json!({ "error": kind, "message": msg }));
    }
    eprintln!("error: {msg}");
}
