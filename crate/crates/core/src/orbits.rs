//! Fixed-point indices of iterates, Dold indices and hidden orbit counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jordan::{JordanSpec, WordMask};
use crate::localmult::{multiplicity, DEFAULT_DEGREE_CAP};
use crate::multipoly::{GermMap, DEFAULT_TERM_LIMIT};
use crate::par;
use crate::resonance::{
    condition_f31, has_lead_variable_shape, project, project_spec, tau, tilde_tau, validate_rnf,
};

pub const DEFAULT_DIRECT_CAP: u64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Projection,
    Direct,
    BothAgree,
}

/// `μ_{f^q}(0)`.
///
/// The projection route reads it off the masked `τf`; the direct route
/// computes `π(f^q − id)` from a jet of `f^q` that is long enough for jet
/// determinacy to certify the answer.
pub fn fixed_point_index(
    spec: &JordanSpec,
    f: &GermMap,
    q: u64,
    route: Route,
    degree_cap: u32,
) -> Result<u64> {
    if q == 0 {
        return Err(Error::domain("iterate count must be positive"));
    }
    match route {
        Route::Projection => {
            let tf = tau(spec, f)?;
            index_by_projection(spec, &tf, q, degree_cap)
        }
        Route::Direct => index_direct(f, q, degree_cap),
        Route::BothAgree => {
            let a = fixed_point_index(spec, f, q, Route::Projection, degree_cap)?;
            let b = index_direct(f, q, degree_cap)?;
            if a != b {
                return Err(Error::Internal(format!(
                    "index of iterate {q}: projection gives {a}, direct composition gives {b}"
                )));
            }
            Ok(a)
        }
    }
}

fn index_by_projection(spec: &JordanSpec, tf: &GermMap, q: u64, cap: u32) -> Result<u64> {
    let g = project(tf, &spec.word_mask(q));
    Ok(multiplicity(&g, cap)?.value)
}

fn index_direct(f: &GermMap, q: u64, cap: u32) -> Result<u64> {
    let q = u32::try_from(q).map_err(|_| Error::domain("iterate count too large for the direct route"))?;
    let mut jet = 8u64;
    loop {
        let fq = f.iterate(q, Some(jet), DEFAULT_TERM_LIMIT)?;
        let g = fq.minus_identity();
        // Stabilization at d* < jet gives m^{d*} ⊆ I, and the dropped terms lie
        // in m^jet ⊆ m^{d*+1}, so they leave the ideal unchanged. A Cronin
        // answer only reads lowest forms, all of degree < jet.
        match multiplicity(&g, jet.min(cap as u64) as u32) {
            Ok(r) => return Ok(r.value),
            Err(Error::NotIsolatedWithinBound { .. }) if jet < cap as u64 => {}
            Err(Error::NotIsolatedWithinBound { .. }) => {
                return Err(Error::NotIsolatedWithinBound { cap, witness: None })
            }
            Err(e) => return Err(e),
        }
        jet *= 2;
    }
}

/// Primes dividing `q`, by trial division.
pub fn prime_factors(mut q: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= q {
        if q % p == 0 {
            out.push(p);
            while q % p == 0 {
                q /= p;
            }
        }
        p += 1;
    }
    if q > 1 {
        out.push(q);
    }
    out
}

/// `q : s = q / ∏_{p∈s} p` for every subset `s` of the primes of `q`, with the
/// sign `(−1)^{#s}`.
pub fn dold_terms(q: u64) -> Vec<(u64, i64)> {
    let primes = prime_factors(q);
    (0u32..1 << primes.len())
        .map(|mask| {
            let mut l = q;
            let mut sign = 1;
            for (i, p) in primes.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    l /= p;
                    sign = -sign;
                }
            }
            (l, sign)
        })
        .collect()
}

/// `P_q(f,0) = Σ_{s ⊆ P(q)} (−1)^{#s} μ_{f^{q:s}}(0)`.
pub fn dold_index(spec: &JordanSpec, f: &GermMap, q: u64, degree_cap: u32) -> Result<i64> {
    let tf = tau(spec, f)?;
    let mut sum = 0i64;
    for (l, sign) in dold_terms(q) {
        sum += sign * index_by_projection(spec, &tf, l, degree_cap)? as i64;
    }
    Ok(sum)
}

fn count_from_dold(q: u64, p: i64) -> Result<u64> {
    if p < 0 || p % q as i64 != 0 {
        return Err(Error::Internal(format!(
            "Dold index P_{q} = {p} is not a non-negative multiple of {q}"
        )));
    }
    Ok(p as u64 / q)
}

/// `N_q(f) = P_q(f,0) / q`.
pub fn hidden_orbit_count(spec: &JordanSpec, f: &GermMap, q: u64, degree_cap: u32) -> Result<u64> {
    count_from_dold(q, dold_index(spec, f, q, degree_cap)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpectrumChecks {
    /// The triangular identity held for every period.
    pub f37: bool,
    /// The direct route was run and agreed with the projection route.
    pub direct: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitSpectrum {
    pub pe: Vec<u64>,
    pub mu: BTreeMap<u64, u64>,
    pub dold: BTreeMap<u64, i64>,
    pub counts: BTreeMap<u64, u64>,
    pub routes: BTreeMap<u64, Route>,
    pub checks: SpectrumChecks,
}

#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    pub cross_check: bool,
    pub direct_cap: u64,
    pub degree_cap: u32,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            cross_check: true,
            direct_cap: DEFAULT_DIRECT_CAP,
            degree_cap: DEFAULT_DEGREE_CAP,
        }
    }
}

/// `N_q(f)` for every `q ∈ PE(Λ) ∪ {1}`.
pub fn orbit_spectrum(spec: &JordanSpec, f: &GermMap, opts: SpectrumOptions) -> Result<OrbitSpectrum> {
    let verdict = validate_rnf(spec, f);
    if !verdict.ok {
        let list: Vec<String> = verdict.violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::domain(format!(
            "map is not in resonant normal form: {}",
            list.join("; ")
        )));
    }
    let tf = tau(spec, f)?;
    let pe = spec.period_set();
    let mut keys = pe.clone();
    keys.insert(1);

    let mut needed: BTreeSet<u64> = keys.iter().flat_map(|&q| dold_terms(q).into_iter().map(|(l, _)| l)).collect();
    if opts.cross_check {
        needed.extend(1..=opts.direct_cap);
    }

    // the index only depends on the mask, so compute one multiplicity per mask
    let mut masks: Vec<WordMask> = Vec::new();
    let mut mask_of: BTreeMap<u64, usize> = BTreeMap::new();
    let mut seen: HashMap<WordMask, usize> = HashMap::new();
    for &l in &needed {
        let w = spec.word_mask(l);
        let idx = *seen.entry(w.clone()).or_insert_with(|| {
            masks.push(w);
            masks.len() - 1
        });
        mask_of.insert(l, idx);
    }
    let per_mask = par::map(&masks, |w| multiplicity(&project(&tf, w), opts.degree_cap).map(|r| r.value))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mu: BTreeMap<u64, u64> = mask_of.iter().map(|(&l, &i)| (l, per_mask[i])).collect();

    let mut dold = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for &q in &keys {
        let p: i64 = dold_terms(q).iter().map(|&(l, s)| s * mu[&l] as i64).sum();
        dold.insert(q, p);
        counts.insert(q, count_from_dold(q, p)?);
    }

    let mut f37 = true;
    for &d in &pe {
        let rhs: u64 = keys.iter().filter(|&&q| d % q == 0).map(|q| q * counts[q]).sum();
        if rhs != mu[&d] {
            f37 = false;
        }
    }
    if !f37 {
        return Err(Error::Internal(format!(
            "triangular identity failed: mu = {mu:?}, counts = {counts:?}"
        )));
    }

    let mut routes: BTreeMap<u64, Route> = mu.keys().map(|&l| (l, Route::Projection)).collect();
    let mut direct = false;
    if opts.cross_check {
        let qs: Vec<u64> = (1..=opts.direct_cap).collect();
        let direct_mu = par::map(&qs, |&q| index_direct(f, q, opts.degree_cap))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        for (&q, &dm) in qs.iter().zip(&direct_mu) {
            if dm != mu[&q] {
                return Err(Error::Internal(format!(
                    "index of iterate {q}: projection gives {}, direct composition gives {dm}; \
                     mu = {mu:?}, dold = {dold:?}",
                    mu[&q]
                )));
            }
            routes.insert(q, Route::BothAgree);
        }
        direct = true;
    }

    Ok(OrbitSpectrum {
        pe: pe.into_iter().collect(),
        mu,
        dold,
        counts,
        routes,
        checks: SpectrumChecks { f37, direct },
    })
}

/// Solves `π_{w(d)} = Σ_{q | d, q ∈ PE ∪ {1}} q·N_q` for the counts.
///
/// `pi_values` must hold every `d ∈ PE(Λ)`; `N_1` is `pi_values[1]` when 1 is a
/// period and 1 otherwise.
pub fn f37_solve(spec: &JordanSpec, pi_values: &BTreeMap<u64, u64>) -> Result<BTreeMap<u64, u64>> {
    let pe = spec.period_set();
    let mut counts = BTreeMap::new();
    if !pe.contains(&1) {
        counts.insert(1, 1);
    }
    for &d in &pe {
        let pi = *pi_values
            .get(&d)
            .ok_or_else(|| Error::domain(format!("missing multiplicity for period {d}")))?;
        let lower: u64 = counts.iter().filter(|(&q, _)| d % q == 0).map(|(q, n)| q * n).sum();
        if pi < lower || (pi - lower) % d != 0 {
            return Err(Error::domain(format!(
                "inconsistent multiplicities: period {d} would need N = ({pi} - {lower}) / {d}"
            )));
        }
        counts.insert(d, (pi - lower) / d);
    }
    Ok(counts)
}

/// `N_q` through the division construction on the masked germ, when the masked
/// matrix satisfies the selection condition and the map has the lead-variable
/// shape. `None` when the construction does not apply.
pub fn count_by_division(spec: &JordanSpec, f: &GermMap, q: u64, degree_cap: u32) -> Result<Option<u64>> {
    let w = spec.word_mask(q);
    let sub = match project_spec(spec, &w)? {
        Some(s) => s,
        None => return Ok(None),
    };
    if sub.global_order() != q {
        return Ok(None);
    }
    let witness = match condition_f31(&sub) {
        Some(w) => w,
        None => return Ok(None),
    };
    let g = project(f, &w);
    let tg = tau(&sub, &g)?;
    if !has_lead_variable_shape(&sub, &tg) {
        return Ok(None);
    }
    let t = tilde_tau(&sub, &g, &witness)?;
    let pi = multiplicity(&t, degree_cap)?.value;
    if pi % q != 0 {
        return Err(Error::Internal(format!(
            "division construction gave multiplicity {pi}, not a multiple of {q}"
        )));
    }
    Ok(Some(pi / q))
}
