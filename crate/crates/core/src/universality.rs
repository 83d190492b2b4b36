//! Universality of Jordan matrices, the residue search used for obstructions,
//! and germs that realize admissible sequences.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactnum::{gcd_u64, lcm_u64, CyclotomicNumber};
use crate::germlang::{print_germ, GermDocument};
use crate::jordan::{is_admissible, JordanBlock, JordanSpec, SequenceTarget};
use crate::localmult::DEFAULT_DEGREE_CAP;
use crate::multipoly::{GermMap, Monomial, Polynomial};
use crate::orbits::{orbit_spectrum, SpectrumOptions};

/// Consecutive blocks satisfy `d_j |≠ d_{j+1}` and `λ_j = λ_{j+1}^{d_{j+1}/d_j}`.
pub fn chain_check(blocks: &[JordanBlock]) -> bool {
    blocks.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        b.order % a.order == 0 && a.order != b.order && a.power % a.order == b.power % a.order
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniversalityMode {
    Chain,
    ChainPlusCoprimeBlock,
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniversalityVerdict {
    pub universal: bool,
    pub mode: UniversalityMode,
    /// Original block indices in witness order; for the second mode the
    /// coprime block comes last.
    pub ordering: Vec<usize>,
    pub failure_reason: Option<String>,
}

/// The unique ordering that could form a chain: the degrees of a chain are
/// strictly increasing, so it is the sort by degree (stable on indices).
fn chain_order(spec: &JordanSpec, subset: &[usize]) -> Option<Vec<usize>> {
    let mut order = subset.to_vec();
    order.sort_by_key(|&i| (spec.blocks()[i].order, i));
    let blocks: Vec<JordanBlock> = order.iter().map(|&i| spec.blocks()[i]).collect();
    chain_check(&blocks).then_some(order)
}

fn chain_failure(spec: &JordanSpec, subset: &[usize]) -> String {
    let mut order = subset.to_vec();
    order.sort_by_key(|&i| (spec.blocks()[i].order, i));
    for w in order.windows(2) {
        let (a, b) = (spec.blocks()[w[0]], spec.blocks()[w[1]]);
        if b.order % a.order != 0 || a.order == b.order {
            return format!("degrees {} and {} do not form a strict divisibility chain", a.order, b.order);
        }
        if a.power % a.order != b.power % a.order {
            return format!(
                "e^(2πi·{}/{}) differs from e^(2πi·{}/{}) raised to the power {}",
                a.power,
                a.order,
                b.power,
                b.order,
                b.order / a.order
            );
        }
    }
    "chain condition fails".into()
}

/// Decides universality from the block divisibility chain and the root-of-unity condition.
pub fn is_universal(spec: &JordanSpec) -> UniversalityVerdict {
    let m = spec.num_blocks();
    let all: Vec<usize> = (0..m).collect();
    if let Some(order) = chain_order(spec, &all) {
        return UniversalityVerdict {
            universal: true,
            mode: UniversalityMode::Chain,
            ordering: order,
            failure_reason: None,
        };
    }
    let mut reasons = vec![format!("condition (1): {}", chain_failure(spec, &all))];
    for b in 0..m {
        let d = spec.blocks()[b].order as u64;
        if m < 2 {
            break;
        }
        if d < 2 {
            reasons.push(format!("condition (2) with block {}: its order is 1", b + 1));
            continue;
        }
        let rest: Vec<usize> = (0..m).filter(|&i| i != b).collect();
        let m1 = rest.iter().fold(1, |acc, &i| lcm_u64(acc, spec.blocks()[i].order as u64));
        if gcd_u64(m1, d) != 1 {
            reasons.push(format!(
                "condition (2) with block {}: gcd({m1}, {d}) = {}",
                b + 1,
                gcd_u64(m1, d)
            ));
            continue;
        }
        match chain_order(spec, &rest) {
            Some(mut order) => {
                order.push(b);
                return UniversalityVerdict {
                    universal: true,
                    mode: UniversalityMode::ChainPlusCoprimeBlock,
                    ordering: order,
                    failure_reason: None,
                };
            }
            None => reasons.push(format!(
                "condition (2) with block {}: {}",
                b + 1,
                chain_failure(spec, &rest)
            )),
        }
    }
    UniversalityVerdict {
        universal: false,
        mode: UniversalityMode::None,
        ordering: vec![],
        failure_reason: Some(reasons.join("; ")),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidueWitness {
    pub k: u64,
    pub residues: Vec<u64>,
    pub product: u64,
    /// `∏a_j / lcm(a)`.
    pub bound: u64,
}

/// Brute-force search for `k` making every `k·r_j mod a_j` nonzero with the
/// smallest product; the first minimizing `k` is returned.
pub fn residue_search(a: &[u64], r: &[u64]) -> Result<ResidueWitness> {
    if a.len() != r.len() || a.is_empty() {
        return Err(Error::domain("residue search needs equal-length nonempty vectors"));
    }
    for (&aj, &rj) in a.iter().zip(r) {
        if !(1 <= rj && rj < aj) || gcd_u64(rj, aj) != 1 {
            return Err(Error::domain(format!(
                "need 1 <= r < a with gcd(r, a) = 1, got r = {rj}, a = {aj}"
            )));
        }
    }
    let l = a.iter().fold(1, |acc, &x| lcm_u64(acc, x));
    let bound = a.iter().product::<u64>() / l;
    let mut best: Option<ResidueWitness> = None;
    for k in 1..=l {
        let residues: Vec<u64> = a.iter().zip(r).map(|(&aj, &rj)| (k % aj) * rj % aj).collect();
        if residues.contains(&0) {
            continue;
        }
        let product = residues.iter().product();
        if best.as_ref().map_or(true, |b| product < b.product) {
            best = Some(ResidueWitness { k, residues, product, bound });
        }
    }
    best.ok_or_else(|| Error::Internal("no admissible multiplier found".into()))
}

pub fn pairwise_coprime(xs: &[u64]) -> bool {
    xs.iter()
        .enumerate()
        .all(|(i, &a)| xs[i + 1..].iter().all(|&b| gcd_u64(a, b) == 1))
}

fn strictly_divides(a: u64, b: u64) -> bool {
    b % a == 0 && a != b
}

fn orders(spec: &JordanSpec) -> Vec<u64> {
    spec.blocks().iter().map(|b| b.order as u64).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// All blocks share one degree: universal iff there is one block.
pub fn equal_degree_predicate(spec: &JordanSpec) -> Option<bool> {
    let d = orders(spec);
    d.iter().all(|&x| x == d[0]).then_some(d.len() == 1)
}

/// Pairwise coprime degrees, at most one equal to 1: universal iff `m ≤ 3`,
/// and some degree is 1 when `m = 3`.
pub fn coprime_degree_predicate(spec: &JordanSpec) -> Option<bool> {
    let d = orders(spec);
    if !pairwise_coprime(&d) || d.iter().filter(|&&x| x == 1).count() > 1 {
        return None;
    }
    let m = d.len();
    Some(m <= 2 || (m == 3 && d.contains(&1)))
}

/// Diagonal, degrees above 1 and pairwise coprime: universal iff `m ≤ 2`.
pub fn gorbovickis_predicate(spec: &JordanSpec) -> Option<bool> {
    let d = orders(spec);
    let diagonal = spec.blocks().iter().all(|b| b.size == 1);
    (diagonal && d.iter().all(|&x| x > 1) && pairwise_coprime(&d)).then_some(d.len() <= 2)
}

/// Two coprime strict chains of length two, all degrees above 1: never universal.
pub fn two_chain_predicate(spec: &JordanSpec) -> Option<bool> {
    let d = orders(spec);
    if d.len() != 4 {
        return None;
    }
    permutations(4)
        .into_iter()
        .any(|p| {
            let e: Vec<u64> = p.iter().map(|&i| d[i]).collect();
            1 < e[0] && strictly_divides(e[0], e[1]) && 1 < e[2] && strictly_divides(e[2], e[3])
                && gcd_u64(e[1], e[3]) == 1
        })
        .then_some(false)
}

/// A degree-1 block plus two coprime strict chains of length two: never universal.
pub fn one_plus_two_chain_predicate(spec: &JordanSpec) -> Option<bool> {
    let d = orders(spec);
    if d.len() != 5 {
        return None;
    }
    permutations(5)
        .into_iter()
        .any(|p| {
            let e: Vec<u64> = p.iter().map(|&i| d[i]).collect();
            e[0] == 1
                && 1 < e[1]
                && strictly_divides(e[1], e[2])
                && 1 < e[3]
                && strictly_divides(e[3], e[4])
                && gcd_u64(e[2], e[4]) == 1
        })
        .then_some(false)
}

/// Degrees form a divisibility chain that is not constant: returns whether
/// the strict, eigenvalue-compatible chain condition holds, which is exactly
/// when a germ with the all-ones spectrum exists.
pub fn divisibility_chain_predicate(spec: &JordanSpec) -> Option<bool> {
    let mut d = orders(spec);
    d.sort_unstable();
    let chain = d.windows(2).all(|w| w[1] % w[0] == 0);
    if !chain || d[0] == *d.last().unwrap() {
        return None;
    }
    let all: Vec<usize> = (0..spec.num_blocks()).collect();
    Some(chain_order(spec, &all).is_some())
}

struct Builder<'a> {
    spec: &'a JordanSpec,
    n: usize,
    m: u32,
}

impl<'a> Builder<'a> {
    fn new(spec: &'a JordanSpec) -> Self {
        Builder {
            spec,
            n: spec.dim(),
            m: spec.modulus(),
        }
    }

    fn mono(&self, factors: &[(usize, u64)]) -> Result<Monomial> {
        let mut e = vec![0u64; self.n];
        for &(j, k) in factors {
            e[j] += k;
        }
        let e = e
            .into_iter()
            .map(|x| u32::try_from(x).map_err(|_| Error::domain("constructed exponent exceeds 32 bits")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Monomial::new(e))
    }

    fn term(&self, sign: i64, factors: &[(usize, u64)]) -> Result<(Monomial, CyclotomicNumber)> {
        Ok((self.mono(factors)?, CyclotomicNumber::from_int(self.m, sign)))
    }

    /// Coordinates of block `t`: `λx_j + x_{j+1}` except the last, which gets
    /// `λx_s` plus `extra`.
    fn block_coords(&self, t: usize, extra: Vec<(Monomial, CyclotomicNumber)>) -> Result<Vec<Polynomial>> {
        let lam = self.spec.eigenvalue(t, self.m)?;
        let mut out = Vec::new();
        for j in self.spec.lead(t)..=self.spec.last(t) {
            let mut p = Polynomial::monomial(Monomial::var(self.n, j), lam.clone());
            if j < self.spec.last(t) {
                p.add_term(Monomial::var(self.n, j + 1), CyclotomicNumber::one(self.m));
            } else {
                for (mono, c) in &extra {
                    p.add_term(mono.clone(), c.clone());
                }
            }
            out.push(p);
        }
        Ok(out)
    }

    fn finish(&self, per_block: Vec<Vec<Polynomial>>) -> Result<GermMap> {
        GermMap::new(per_block.into_iter().flatten().collect(), self.m)
    }
}

/// The chain germ: along `order`, the last coordinate of the `t`-th block gets
/// `x_{lead 0}^{r_t d_0} x_{lead t} + x_{lead t+1}^{d_{t+1}/d_t}`.
pub fn chain_germ(spec: &JordanSpec, order: &[usize], r: &[u64]) -> Result<GermMap> {
    let m = order.len();
    if m != spec.num_blocks() || r.len() != m {
        return Err(Error::domain("ordering and parameters must cover every block"));
    }
    if r.iter().any(|&x| x == 0) {
        return Err(Error::domain("chain parameters must be positive"));
    }
    let b = Builder::new(spec);
    let x = spec.lead(order[0]);
    let d0 = spec.blocks()[order[0]].order as u64;
    let mut per_block = vec![Vec::new(); m];
    for (t, &blk) in order.iter().enumerate() {
        let lead = spec.lead(blk);
        let mut extra = vec![b.term(1, &[(x, r[t] * d0), (lead, 1)])?];
        if t + 1 < m {
            let next = order[t + 1];
            let ratio = (spec.blocks()[next].order / spec.blocks()[blk].order) as u64;
            extra.push(b.term(1, &[(spec.lead(next), ratio)])?);
        }
        per_block[blk] = b.block_coords(blk, extra)?;
    }
    b.finish(per_block)
}

/// The germ realizing a chain followed by one coprime block.
///
/// `r` holds one parameter per position of `order`; `r_mixed[t]` is the count
/// for period `d_t·d_last` (ignored for `t = 0` when `d_0 = 1`).
pub fn chain_plus_coprime_germ(
    spec: &JordanSpec,
    order: &[usize],
    r: &[u64],
    r_mixed: &[u64],
) -> Result<GermMap> {
    let m = order.len();
    if m < 2 || m != spec.num_blocks() || r.len() != m || r_mixed.len() != m - 1 {
        return Err(Error::domain("ordering and parameters must cover every block"));
    }
    let last = m - 1;
    let b = Builder::new(spec);
    let d = |t: usize| spec.blocks()[order[t]].order as u64;
    let lead = |t: usize| spec.lead(order[t]);
    let (x, z) = (lead(0), lead(last));
    let (d0, dz, rz) = (d(0), d(last), r[last]);
    let chain_term = |t: usize| -> Result<Option<(Monomial, CyclotomicNumber)>> {
        if t + 1 < last {
            Ok(Some(b.term(1, &[(lead(t + 1), d(t + 1) / d(t))])?))
        } else {
            Ok(None)
        }
    };
    let mut per_block = vec![Vec::new(); m];
    for t in 0..m {
        let mut extra = Vec::new();
        if d0 > 1 {
            if t == 0 {
                extra.push(b.term(1, &[(x, r[0] * d0 + 1)])?);
                extra.push(b.term(-1, &[(x, 1), (z, rz * r[0] * dz)])?);
                extra.push(b.term(1, &[(x, 1), (z, r_mixed[0] * dz)])?);
            } else if t < last {
                let l = lead(t);
                extra.push(b.term(1, &[(l, 1), (x, r[t] * d0)])?);
                extra.push(b.term(-1, &[(l, 1), (z, rz * dz), (x, (r[t] - 1) * d0)])?);
                extra.push(b.term(1, &[(l, 1), (z, r_mixed[t] * dz)])?);
            } else {
                extra.push(b.term(1, &[(z, 1), (x, d0)])?);
                extra.push(b.term(-1, &[(z, rz * dz + 1)])?);
            }
        } else if t == 0 {
            extra.push(b.term(1, &[(x, r[0] + 1)])?);
            extra.push(b.term(1, &[(z, rz * dz)])?);
        } else if t < last {
            let l = lead(t);
            extra.push(b.term(1, &[(l, 1), (x, r[t])])?);
            extra.push(b.term(1, &[(l, 1), (z, r_mixed[t] * dz)])?);
        } else {
            extra.push(b.term(1, &[(z, 1), (x, 1)])?);
        }
        if t < last {
            extra.extend(chain_term(t)?);
        }
        if r[t] == 0 {
            return Err(Error::domain("block parameters must be positive"));
        }
        per_block[order[t]] = b.block_coords(order[t], extra)?;
    }
    b.finish(per_block)
}

/// An upper bound for every multiplicity met while computing the spectrum of a
/// germ with counts `target`: the full fixed-point index `Σ q·N_q`.
fn degree_cap_for(target: &BTreeMap<u64, u64>) -> u32 {
    let total: u64 = target.iter().map(|(q, n)| q * n).sum();
    (total + 1).clamp(DEFAULT_DEGREE_CAP as u64, u32::MAX as u64) as u32
}

/// Builds a germ with linear part `Λ` whose hidden orbit counts are `target`,
/// and checks the result by computing its spectrum.
pub fn realize(spec: &JordanSpec, target: &SequenceTarget) -> Result<GermDocument> {
    let adm = is_admissible(spec, target);
    if !adm.admissible {
        return Err(Error::domain(format!(
            "target is not admissible: {}",
            adm.violation.unwrap_or_default()
        )));
    }
    let verdict = is_universal(spec);
    let order = verdict.ordering.clone();
    let full = target.completed(spec);
    let d = |t: usize| spec.blocks()[order[t]].order as u64;
    let count = |q: u64| full.get(&q).copied().unwrap_or(0);
    let first = |t: usize| if t == 0 && d(0) == 1 { count(1) - 1 } else { count(d(t)) };
    let map = match verdict.mode {
        UniversalityMode::None => {
            return Err(Error::domain(format!(
                "matrix is not universal: {}",
                verdict.failure_reason.unwrap_or_default()
            )))
        }
        UniversalityMode::Chain => {
            let r: Vec<u64> = (0..order.len()).map(first).collect();
            chain_germ(spec, &order, &r)?
        }
        UniversalityMode::ChainPlusCoprimeBlock => {
            let m = order.len();
            let r: Vec<u64> = (0..m).map(first).collect();
            let dz = d(m - 1);
            let mixed: Vec<u64> = (0..m - 1)
                .map(|t| if d(t) == 1 { 1 } else { count(d(t) * dz) })
                .collect();
            chain_plus_coprime_germ(spec, &order, &r, &mixed)?
        }
    };
    let doc = GermDocument::new(spec.clone(), map)?;
    let opts = SpectrumOptions {
        cross_check: false,
        degree_cap: degree_cap_for(&full),
        ..SpectrumOptions::default()
    };
    let spectrum = orbit_spectrum(spec, &doc.map, opts).map_err(|e| {
        Error::Internal(format!("constructed germ failed verification ({e}):\n{}", print_germ(&doc)))
    })?;
    if spectrum.counts != full {
        return Err(Error::Internal(format!(
            "constructed germ has counts {:?}, target {:?}:\n{}",
            spectrum.counts,
            full,
            print_germ(&doc)
        )));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germlang::format_polynomial;

    fn spec(t: &[(u32, u32, u32)]) -> JordanSpec {
        JordanSpec::from_triples(t).unwrap()
    }

    fn diag(d: &[u32]) -> JordanSpec {
        let t: Vec<_> = d.iter().map(|&d| (1, d, 1)).collect();
        spec(&t)
    }

    #[test]
    fn chains() {
        let b = |d, r| JordanBlock::new(1, d, r).unwrap();
        assert!(chain_check(&[b(2, 1), b(6, 1)]));
        assert!(!chain_check(&[b(3, 2), b(6, 1)]));
        assert!(chain_check(&[b(5, 2)]));
        assert!(!chain_check(&[b(2, 1), b(2, 1)]));
        assert!(chain_check(&[b(1, 1), b(4, 3), b(8, 7)]));
        assert!(!chain_check(&[b(1, 1), b(4, 3), b(8, 5)]));
    }

    #[test]
    fn decision_table() {
        let v = is_universal(&spec(&[(3, 4, 1)]));
        assert!(v.universal && v.mode == UniversalityMode::Chain);
        let v = is_universal(&diag(&[2, 3]));
        assert_eq!(v.mode, UniversalityMode::ChainPlusCoprimeBlock);
        assert_eq!(v.ordering, vec![1, 0]);
        assert!(!is_universal(&diag(&[2, 3, 5])).universal);
        let v = is_universal(&spec(&[(1, 3, 2), (1, 6, 1)]));
        assert!(!v.universal);
        assert!(v.failure_reason.unwrap().contains("gcd"));
        let v = is_universal(&diag(&[1, 2, 3]));
        assert!(v.universal);
        assert_eq!(v.ordering, vec![0, 2, 1]);
        assert_eq!(v.mode, UniversalityMode::ChainPlusCoprimeBlock);
        assert!(!is_universal(&diag(&[3, 3])).universal);
        assert!(!is_universal(&diag(&[2, 4, 3, 9])).universal);
        assert!(!is_universal(&diag(&[1, 2, 4, 3, 9])).universal);
        let v = is_universal(&spec(&[(1, 6, 1), (2, 1, 1), (1, 2, 1)]));
        assert_eq!((v.mode, v.ordering), (UniversalityMode::Chain, vec![1, 2, 0]));
    }

    #[test]
    fn special_predicates() {
        assert_eq!(equal_degree_predicate(&diag(&[3, 3])), Some(false));
        assert_eq!(equal_degree_predicate(&diag(&[3])), Some(true));
        assert_eq!(equal_degree_predicate(&diag(&[3, 2])), None);
        assert_eq!(coprime_degree_predicate(&diag(&[1, 2, 3])), Some(true));
        assert_eq!(coprime_degree_predicate(&diag(&[2, 3, 5])), Some(false));
        assert_eq!(coprime_degree_predicate(&diag(&[1, 1])), None);
        assert_eq!(gorbovickis_predicate(&diag(&[2, 3])), Some(true));
        assert_eq!(gorbovickis_predicate(&diag(&[2, 3, 5])), Some(false));
        assert_eq!(two_chain_predicate(&diag(&[3, 9, 2, 4])), Some(false));
        assert_eq!(two_chain_predicate(&diag(&[3, 9, 2, 6])), None);
        assert_eq!(one_plus_two_chain_predicate(&diag(&[2, 4, 1, 3, 9])), Some(false));
        assert_eq!(divisibility_chain_predicate(&spec(&[(1, 2, 1), (1, 6, 1)])), Some(true));
        assert_eq!(divisibility_chain_predicate(&spec(&[(1, 3, 2), (1, 6, 1)])), Some(false));
        assert_eq!(divisibility_chain_predicate(&diag(&[2, 2, 4])), Some(false));
    }

    #[test]
    fn residue_examples() {
        let w = residue_search(&[2, 4], &[1, 1]).unwrap();
        assert_eq!((w.k, w.residues.clone(), w.product, w.bound), (1, vec![1, 1], 1, 2));
        let w = residue_search(&[2, 3], &[1, 2]).unwrap();
        assert_eq!((w.k, w.residues.clone(), w.product, w.bound), (5, vec![1, 1], 1, 1));
        let w = residue_search(&[5], &[2]).unwrap();
        assert_eq!((w.k, w.residues), (3, vec![1]));
        assert!(residue_search(&[4], &[2]).is_err());
        assert!(residue_search(&[1], &[1]).is_err());
    }

    #[test]
    fn realize_one_dimensional() {
        let s = spec(&[(1, 3, 1)]);
        let doc = realize(&s, &SequenceTarget::from_pairs(&[(1, 1), (3, 2)])).unwrap();
        assert_eq!(format_polynomial(doc.map.coord(0)), "w(3,1)*x1 + x1^7");
    }

    #[test]
    fn realize_modes() {
        let cases: Vec<(JordanSpec, Vec<(u64, u64)>)> = vec![
            (spec(&[(1, 2, 1), (1, 6, 1)]), vec![(1, 1), (2, 2), (6, 3)]),
            (spec(&[(1, 1, 1), (1, 2, 1), (1, 6, 5)]), vec![(1, 3), (2, 1), (6, 2)]),
            (diag(&[2, 3]), vec![(1, 1), (2, 2), (3, 1), (6, 2)]),
            (diag(&[1, 3]), vec![(1, 2), (3, 3)]),
            (spec(&[(2, 3, 1), (1, 2, 1)]), vec![(1, 1), (2, 1), (3, 2), (6, 1)]),
        ];
        for (s, pairs) in cases {
            let t = SequenceTarget::from_pairs(&pairs);
            realize(&s, &t).unwrap_or_else(|e| panic!("{s}: {e}"));
        }
        assert!(realize(&diag(&[2, 3, 5]), &SequenceTarget::from_pairs(&[(2, 1), (3, 1), (5, 1)])).is_err());
    }
}
