//! The regression suite: every bundled fixture against its expected spectrum,
//! plus the worked examples that need no fixture file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use orbitdex::germlang::{parse_germ, print_germ};
use orbitdex::jordan::{JordanSpec, SequenceTarget};
use orbitdex::orbits::{orbit_spectrum, OrbitSpectrum, SpectrumOptions};
use orbitdex::par;
use orbitdex::universality::{
    chain_germ, chain_plus_coprime_germ, coprime_degree_predicate, equal_degree_predicate, gorbovickis_predicate,
    is_universal, one_plus_two_chain_predicate, realize, residue_search, two_chain_predicate,
};
use serde_json::{json, Value};

use crate::output::spectrum_json;

pub fn default_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

enum Check {
    Fixture(PathBuf),
    OneDimensional,
    UniversalityTable,
    ResidueExamples,
    RealizeExamples,
    Example31Sweep,
}

impl Check {
    fn name(&self) -> String {
        match self {
            Check::Fixture(p) => format!("fixture/{}", p.file_stem().unwrap().to_string_lossy()),
            Check::OneDimensional => "one-dimensional-family".into(),
            Check::UniversalityTable => "universality-table".into(),
            Check::ResidueExamples => "lemma42-examples".into(),
            Check::RealizeExamples => "realize-examples".into(),
            Check::Example31Sweep => "example31-sweep".into(),
        }
    }
}

pub struct CheckResult {
    pub name: String,
    pub outcome: Result<(), String>,
    pub elapsed: Duration,
}

pub struct Report {
    pub results: Vec<CheckResult>,
    timing: bool,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.outcome.is_ok())
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let status = if r.outcome.is_ok() { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status}  {}", r.name));
            if self.timing {
                out.push_str(&format!("  ({:.2} s)", r.elapsed.as_secs_f64()));
            }
            if let Err(e) = &r.outcome {
                out.push_str(&format!("\n      {e}"));
            }
            out.push('\n');
        }
        let failed = self.results.iter().filter(|r| r.outcome.is_err()).count();
        out.push_str(&format!("{} passed, {failed} failed", self.results.len() - failed));
        out
    }

    pub fn json(&self) -> Value {
        let results: Vec<Value> = self
            .results
            .iter()
            .map(|r| {
                let mut v = json!({ "name": r.name, "passed": r.outcome.is_ok() });
                if let Err(e) = &r.outcome {
                    v["detail"] = json!(e);
                }
                if self.timing {
                    v["elapsed_ms"] = json!(r.elapsed.as_millis() as u64);
                }
                v
            })
            .collect();
        let failed = self.results.iter().filter(|r| r.outcome.is_err()).count();
        json!({ "results": results, "passed": self.results.len() - failed, "failed": failed })
    }
}

pub fn run(dir: &Path, filter: Option<&str>, bless: bool, timing: bool, cap: u32) -> Result<Report, String> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "germ"))
        .collect();
    files.sort();
    let mut checks: Vec<Check> = files.into_iter().map(Check::Fixture).collect();
    if !bless {
        checks.extend([
            Check::OneDimensional,
            Check::UniversalityTable,
            Check::ResidueExamples,
            Check::RealizeExamples,
            Check::Example31Sweep,
        ]);
    }
    checks.retain(|c| filter.map_or(true, |f| c.name().contains(f)));
    let results = par::map(&checks, |c| {
        let start = Instant::now();
        let outcome = match c {
            Check::Fixture(p) => fixture(p, bless, cap),
            Check::OneDimensional => one_dimensional(cap),
            Check::UniversalityTable => universality_table(),
            Check::ResidueExamples => residue_examples(),
            Check::RealizeExamples => realize_examples(),
            Check::Example31Sweep => example31_sweep(),
        };
        CheckResult {
            name: c.name(),
            outcome,
            elapsed: start.elapsed(),
        }
    });
    Ok(Report { results, timing })
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Periods carry orbits exactly where the linear map has periodic points.
pub fn positivity(s: &OrbitSpectrum) -> Result<(), String> {
    for (&q, &n) in &s.counts {
        let in_pe = s.pe.contains(&q);
        let positive = if q == 1 { n >= 2 } else { n > 0 };
        if positive != in_pe {
            return Err(format!("N_{q} = {n} but {q} is {}in PE", if in_pe { "" } else { "not " }));
        }
    }
    Ok(())
}

fn fixture(path: &Path, bless: bool, cap: u32) -> Result<(), String> {
    let text = fs::read_to_string(path).map_err(err)?;
    let doc = parse_germ(&text).map_err(err)?;
    if parse_germ(&print_germ(&doc)).map_err(err)? != doc {
        return Err("printing and reparsing changes the document".into());
    }
    let opts = SpectrumOptions {
        degree_cap: cap,
        ..SpectrumOptions::default()
    };
    let s = orbit_spectrum(&doc.matrix, &doc.map, opts).map_err(err)?;
    if !s.checks.f37 || !s.checks.direct {
        return Err("consistency checks did not run".into());
    }
    positivity(&s)?;
    let found = spectrum_json(&s, false);
    let sidecar = path.with_extension("expected.json");
    if bless {
        let body = serde_json::to_string_pretty(&found).map_err(err)? + "\n";
        return fs::write(&sidecar, body).map_err(err);
    }
    let expected: Value = fs::read_to_string(&sidecar)
        .map_err(|e| format!("{}: {e}", sidecar.display()))
        .and_then(|t| serde_json::from_str(&t).map_err(err))?;
    if expected != found {
        return Err(format!("expected {expected}, computed {found}"));
    }
    Ok(())
}

fn one_dimensional(cap: u32) -> Result<(), String> {
    for d in [1u32, 2, 3, 4, 6] {
        for r in 1..=3u64 {
            let spec = JordanSpec::from_triples(&[(1, d, 1)]).map_err(err)?;
            let f = chain_germ(&spec, &[0], &[r]).map_err(err)?;
            let opts = SpectrumOptions {
                degree_cap: cap,
                ..SpectrumOptions::default()
            };
            let s = orbit_spectrum(&spec, &f, opts).map_err(err)?;
            let want = if d == 1 { r + 1 } else { r };
            if s.counts[&(d as u64)] != want {
                return Err(format!("d = {d}, r = {r}: N_{d} = {}, expected {want}", s.counts[&(d as u64)]));
            }
        }
    }
    Ok(())
}

pub const UNIVERSALITY_TABLE: &[(&str, bool)] = &[
    ("[(1,4,1)]", true),
    ("[(3,4,1)]", true),
    ("[(1,2,1);(1,3,1)]", true),
    ("[(1,2,1);(1,3,1);(1,5,1)]", false),
    ("[(1,1,1);(1,2,1);(1,3,1)]", true),
    ("[(1,3,1);(1,3,2)]", false),
    ("[(1,2,1);(1,2,1)]", false),
    ("[(1,2,1);(1,4,1);(1,3,1);(1,9,1)]", false),
    ("[(1,1,1);(1,2,1);(1,4,1);(1,3,1);(1,9,1)]", false),
    ("[(1,3,2);(1,6,1)]", false),
    ("[(1,2,1);(1,6,1)]", true),
    ("[(1,2,1);(1,6,1);(1,5,1)]", true),
];

fn universality_table() -> Result<(), String> {
    for &(text, want) in UNIVERSALITY_TABLE {
        let spec = JordanSpec::parse_inline(text).map_err(err)?;
        let got = is_universal(&spec).universal;
        if got != want {
            return Err(format!("{text}: decided {got}, expected {want}"));
        }
        let predicates = [
            equal_degree_predicate(&spec),
            coprime_degree_predicate(&spec),
            gorbovickis_predicate(&spec),
            two_chain_predicate(&spec),
            one_plus_two_chain_predicate(&spec),
        ];
        if predicates.iter().flatten().any(|&p| p != got) {
            return Err(format!("{text}: a special-case predicate disagrees with the decision"));
        }
    }
    Ok(())
}

fn residue_examples() -> Result<(), String> {
    let cases: [(&[u64], &[u64], u64, &[u64]); 3] =
        [(&[2, 4], &[1, 1], 1, &[1, 1]), (&[2, 3], &[1, 2], 5, &[1, 1]), (&[5], &[2], 3, &[1])];
    for (a, r, k, residues) in cases {
        let w = residue_search(a, r).map_err(err)?;
        if w.k != k || w.residues != residues {
            return Err(format!("a = {a:?}, r = {r:?}: got k = {}, residues {:?}", w.k, w.residues));
        }
    }
    Ok(())
}

fn realize_examples() -> Result<(), String> {
    let cases = [
        ("[(1,3,1)]", "1:1,3:2", Some("w(3,1)*x1 + x1^7")),
        ("[(1,1,1)]", "1:3", Some("x1 + x1^3")),
        ("[(1,2,1);(1,6,1)]", "1:1,2:2,6:3", None),
    ];
    for (m, seq, germ) in cases {
        let spec = JordanSpec::parse_inline(m).map_err(err)?;
        let doc = realize(&spec, &SequenceTarget::parse(seq).map_err(err)?).map_err(err)?;
        if let Some(g) = germ {
            let found = orbitdex::germlang::format_polynomial(doc.map.coord(0));
            if found != g {
                return Err(format!("{m}: built {found}, expected {g}"));
            }
        }
    }
    Ok(())
}

fn example31_sweep() -> Result<(), String> {
    let spec = JordanSpec::from_triples(&[(1, 2, 1), (1, 6, 1), (1, 5, 1)]).map_err(err)?;
    for bits in 0..32u32 {
        let p: Vec<u64> = (0..5).map(|i| 1 + (bits >> i & 1) as u64).collect();
        let f = chain_plus_coprime_germ(&spec, &[0, 1, 2], &p[..3], &p[3..]).map_err(err)?;
        let opts = SpectrumOptions {
            cross_check: false,
            degree_cap: 256,
            ..SpectrumOptions::default()
        };
        let s = orbit_spectrum(&spec, &f, opts).map_err(err)?;
        let want = [(2, p[0]), (6, p[1]), (5, p[2]), (10, p[3]), (30, p[4])];
        for (q, n) in want {
            if s.counts[&q] != n {
                return Err(format!("parameters {p:?}: N_{q} = {}, expected {n}", s.counts[&q]));
            }
        }
    }
    Ok(())
}
