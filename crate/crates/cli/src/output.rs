use std::collections::BTreeMap;
use std::fmt::Display;

use orbitdex::orbits::OrbitSpectrum;
use serde_json::{json, Map, Value};

const MAX_SAFE: i128 = (1 << 53) - 1;

/// Integers outside the range a double holds exactly are emitted as strings.
pub fn int(v: impl Into<i128>) -> Value {
    let v = v.into();
    if v.abs() > MAX_SAFE {
        Value::String(v.to_string())
    } else if v < 0 {
        json!(v as i64)
    } else {
        json!(v as u64)
    }
}

pub fn int_map<K: Display, V: Copy + Into<i128>>(m: &BTreeMap<K, V>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.to_string(), int(*v))).collect::<Map<_, _>>())
}

pub fn spectrum_json(s: &OrbitSpectrum, with_checks: bool) -> Value {
    let mut out = json!({
        "pe": s.pe.iter().map(|&q| int(q)).collect::<Vec<_>>(),
        "mu": int_map(&s.mu),
        "dold": int_map(&s.dold),
        "counts": int_map(&s.counts),
    });
    if with_checks {
        out["checks"] = json!({ "f37": s.checks.f37, "direct": s.checks.direct });
    }
    out
}

pub fn spectrum_table(s: &OrbitSpectrum) -> String {
    let mut out = format!("PE = {{{}}}\n", join(&s.pe));
    out.push_str(&format!("{:>6} {:>10} {:>10} {:>8}\n", "q", "mu", "P_q", "N_q"));
    for (q, mu) in &s.mu {
        let dash = || "-".to_string();
        let p = s.dold.get(q).map_or_else(dash, i64::to_string);
        let n = s.counts.get(q).map_or_else(dash, u64::to_string);
        out.push_str(&format!("{q:>6} {mu:>10} {p:>10} {n:>8}\n"));
    }
    out.push_str(&format!(
        "checks: triangular relation {}, direct composition {}",
        pass(s.checks.f37),
        if s.checks.direct { "agrees" } else { "skipped" }
    ));
    out
}

pub fn join<T: Display>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "holds"
    } else {
        "FAILS"
    }
}
