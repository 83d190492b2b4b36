//! Local multiplicity `π_f(0)` of an isolated zero of a polynomial germ.
//!
//! `Q_d = dim K[x]_{<d} / span{trunc_d(x^α f_i)}` is nondecreasing in `d` and
//! the first `d` with `Q_d = Q_{d+1}` certifies `π_f(0) = Q_d`. A single
//! elimination at level `D` yields every `Q_d` with `d ≤ D`: rows are kept in
//! echelon form with respect to their lowest monomial, and truncating at `d`
//! keeps exactly the echelon rows whose lowest monomial has degree `< d`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactnum::{BigRational, CyclotomicNumber, Field};
use crate::multipoly::{GermMap, Monomial, Polynomial};
use crate::par;

pub const DEFAULT_DEGREE_CAP: u32 = 64;

const INITIAL_LEVEL: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiplicityResult {
    pub value: u64,
    /// First `d` with `Q_d = Q_{d+1}`; 0 when a fast path answered.
    pub stabilization_degree: u32,
    /// `Q_1, …, Q_{d*+1}`; empty when a fast path answered.
    pub quotient_dims: Vec<u64>,
    pub fast_path: bool,
}

/// `π_f(0)`, trying the Cronin fast path first.
pub fn multiplicity(f: &GermMap, degree_cap: u32) -> Result<MultiplicityResult> {
    if f.nvars() == 0 {
        return Ok(MultiplicityResult {
            value: 1,
            stabilization_degree: 0,
            quotient_dims: vec![],
            fast_path: true,
        });
    }
    if f.coords().iter().any(Polynomial::is_zero) {
        return Err(not_isolated(f, degree_cap));
    }
    if let Some(v) = cronin(f)? {
        return Ok(MultiplicityResult {
            value: v,
            stabilization_degree: 0,
            quotient_dims: vec![],
            fast_path: true,
        });
    }
    multiplicity_general(f, degree_cap)
}

/// `π_f(0)` by quotient stabilization alone.
pub fn multiplicity_general(f: &GermMap, degree_cap: u32) -> Result<MultiplicityResult> {
    if f.nvars() == 0 {
        return Ok(MultiplicityResult {
            value: 1,
            stabilization_degree: 1,
            quotient_dims: vec![1, 1],
            fast_path: false,
        });
    }
    if f.coords().iter().any(Polynomial::is_zero) {
        return Err(not_isolated(f, degree_cap));
    }
    let cap = degree_cap.max(2);
    let mut level = INITIAL_LEVEL.min(cap);
    loop {
        let dims = quotient_dims(f, level);
        if let Some(d) = (1..level as usize).find(|&d| dims[d - 1] == dims[d]) {
            return Ok(MultiplicityResult {
                value: dims[d - 1],
                stabilization_degree: d as u32,
                quotient_dims: dims[..=d].to_vec(),
                fast_path: false,
            });
        }
        if level >= cap {
            return Err(not_isolated(f, degree_cap));
        }
        level = (level + level / 2).min(cap);
    }
}

/// `Q_d` for a single `d`.
pub fn truncated_quotient_dim(f: &GermMap, d: u32) -> u64 {
    if d == 0 {
        return 0;
    }
    *quotient_dims(f, d).last().unwrap()
}

/// `Q_1, …, Q_level`.
pub fn quotient_dims(f: &GermMap, level: u32) -> Vec<u64> {
    if f.is_rational() {
        let rows = f
            .coords()
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(m, c)| (m.clone(), c.as_rational().unwrap().clone()))
                    .collect::<Vec<(Monomial, BigRational)>>()
            })
            .collect::<Vec<_>>();
        quotient_dims_over(f.nvars(), &rows, level)
    } else {
        let rows = f
            .coords()
            .iter()
            .map(|p| p.terms().map(|(m, c)| (m.clone(), c.clone())).collect::<Vec<_>>())
            .collect::<Vec<Vec<(Monomial, CyclotomicNumber)>>>();
        quotient_dims_over(f.nvars(), &rows, level)
    }
}

/// All exponent vectors of total degree `deg` in `n` variables.
pub fn monomials_of_degree(n: usize, deg: u32) -> Vec<Monomial> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(Monomial::new(cur.clone()));
            cur.pop();
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(n, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if deg == 0 {
            out.push(Monomial::new(vec![]));
        }
        return out;
    }
    rec(n, deg, &mut Vec::with_capacity(n), &mut out);
    out.sort();
    out
}

type Row<F> = Vec<(u32, F)>;

/// Rows in echelon form with respect to their first (lowest) column.
struct Echelon<F> {
    pivots: Vec<Option<Row<F>>>,
}

impl<F: Field> Echelon<F> {
    fn new(ncols: usize) -> Self {
        Echelon {
            pivots: (0..ncols).map(|_| None).collect(),
        }
    }

    fn reduce(&self, mut row: Row<F>) -> Row<F> {
        while let Some((c, a)) = row.first() {
            match &self.pivots[*c as usize] {
                Some(p) => {
                    let a = a.clone();
                    row = sub_scaled(&row, &a, p);
                }
                None => break,
            }
        }
        row
    }

    /// Stores a reduced row, returning its pivot column.
    fn insert(&mut self, row: Row<F>) -> Option<u32> {
        let row = self.reduce(row);
        let (c, a) = row.first()?;
        let c = *c;
        let inv = a.inv();
        let normalized: Row<F> = row.iter().map(|(j, v)| (*j, v.mul(&inv))).collect();
        self.pivots[c as usize] = Some(normalized);
        Some(c)
    }
}

/// `row − a·pivot` where `pivot` starts with a unit entry in `row`'s first column.
fn sub_scaled<F: Field>(row: &Row<F>, a: &F, pivot: &Row<F>) -> Row<F> {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (1, 1);
    while i < row.len() || j < pivot.len() {
        let ci = row.get(i).map(|x| x.0).unwrap_or(u32::MAX);
        let cj = pivot.get(j).map(|x| x.0).unwrap_or(u32::MAX);
        if ci < cj {
            out.push(row[i].clone());
            i += 1;
        } else if cj < ci {
            out.push((cj, pivot[j].1.mul(a).neg()));
            j += 1;
        } else {
            let v = row[i].1.sub(&pivot[j].1.mul(a));
            if !v.is_zero_el() {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// The finest grading by `Z^n / L` in which every generator is homogeneous,
/// `L` being spanned by exponent differences within each generator. Monomials
/// of different cosets never interact during elimination.
struct Grading {
    /// Echelon basis of `L` with positive pivots; `None` when the entries
    /// outgrew `i64` and no splitting is attempted.
    basis: Option<Vec<(usize, Vec<i64>)>>,
}

impl Grading {
    fn detect<F>(n: usize, gens: &[Vec<(Monomial, F)>]) -> Grading {
        let mut diffs: Vec<Vec<i128>> = Vec::new();
        for g in gens {
            if let Some((m0, _)) = g.first() {
                for (m, _) in &g[1..] {
                    let d = (0..n)
                        .map(|j| m.exponents()[j] as i128 - m0.exponents()[j] as i128)
                        .collect();
                    diffs.push(d);
                }
            }
        }
        Grading {
            basis: integer_echelon(n, diffs),
        }
    }

    fn class(&self, e: &[u32]) -> Vec<i64> {
        let Some(basis) = &self.basis else {
            return Vec::new();
        };
        let mut v: Vec<i64> = e.iter().map(|&x| x as i64).collect();
        for (c, row) in basis {
            let q = v[*c].div_euclid(row[*c]);
            if q != 0 {
                for (x, r) in v.iter_mut().zip(row) {
                    *x -= q * r;
                }
            }
        }
        v
    }
}

fn integer_echelon(n: usize, mut rows: Vec<Vec<i128>>) -> Option<Vec<(usize, Vec<i64>)>> {
    const BOUND: i128 = 1 << 40;
    let mut out = Vec::new();
    for c in 0..n {
        rows.retain(|r| r.iter().any(|&x| x != 0));
        loop {
            let Some(p) = (0..rows.len()).filter(|&i| rows[i][c] != 0).min_by_key(|&i| rows[i][c].abs()) else {
                break;
            };
            let pivot = rows[p].clone();
            let mut done = true;
            for (i, r) in rows.iter_mut().enumerate() {
                if i != p && r[c] != 0 {
                    let q = r[c] / pivot[c];
                    for (x, y) in r.iter_mut().zip(&pivot) {
                        *x -= q * y;
                        if x.abs() > BOUND {
                            return None;
                        }
                    }
                    done &= r[c] == 0;
                }
            }
            if done {
                let mut pivot = rows.swap_remove(p);
                if pivot[c] < 0 {
                    pivot.iter_mut().for_each(|x| *x = -*x);
                }
                out.push((c, pivot.into_iter().map(|x| x as i64).collect()));
                break;
            }
        }
    }
    Some(out)
}

fn quotient_dims_over<F: Field>(n: usize, gens: &[Vec<(Monomial, F)>], level: u32) -> Vec<u64> {
    quotient_dims_graded(n, gens, level, &Grading::detect(n, gens))
}

fn quotient_dims_graded<F: Field>(
    n: usize,
    gens: &[Vec<(Monomial, F)>],
    level: u32,
    grading: &Grading,
) -> Vec<u64> {
    let by_degree: Vec<Vec<Monomial>> = (0..level).map(|k| monomials_of_degree(n, k)).collect();

    // columns of each coset, in ascending monomial order
    let mut class_of: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut blocks: Vec<Block<'_>> = Vec::new();
    for (k, ms) in by_degree.iter().enumerate() {
        for m in ms {
            let key = grading.class(m.exponents());
            let b = *class_of.entry(key).or_insert_with(|| {
                blocks.push(Block::default());
                blocks.len() - 1
            });
            let blk = &mut blocks[b];
            blk.col_of.insert(m.clone(), blk.col_degree.len() as u32);
            blk.col_degree.push(k as u32);
        }
    }

    let orders: Vec<u32> = gens
        .iter()
        .map(|g| g.iter().map(|(m, _)| m.degree() as u32).min().unwrap_or(level))
        .collect();
    for (i, &ord) in orders.iter().enumerate() {
        let Some((lead, _)) = gens[i].first() else { continue };
        for k in 0..level.saturating_sub(ord) {
            for alpha in &by_degree[k as usize] {
                let key = grading.class(lead.checked_mul(alpha).expect("bounded degree").exponents());
                if let Some(&b) = class_of.get(&key) {
                    blocks[b].jobs.push((i, alpha));
                }
            }
        }
    }

    let pivots_below = par::map(&blocks, |blk| blk.eliminate(gens, level));
    let mut dims = Vec::with_capacity(level as usize);
    let (mut monos, mut piv) = (0u64, 0u64);
    for d in 1..=level as usize {
        monos += by_degree[d - 1].len() as u64;
        piv += pivots_below.iter().map(|p| p[d]).sum::<u64>();
        dims.push(monos - piv);
    }
    dims
}

#[derive(Default)]
struct Block<'a> {
    col_of: HashMap<Monomial, u32>,
    col_degree: Vec<u32>,
    /// `(generator, multiplier)`, grouped by ascending multiplier degree.
    jobs: Vec<(usize, &'a Monomial)>,
}

impl Block<'_> {
    /// Number of pivots of each degree, shifted by one: entry `d` counts
    /// pivots of degree `d − 1`.
    fn eliminate<F: Field>(&self, gens: &[Vec<(Monomial, F)>], level: u32) -> Vec<u64> {
        let mut jobs = self.jobs.clone();
        jobs.sort_by_key(|(_, a)| a.degree());
        let mut ech = Echelon::<F>::new(self.col_degree.len());
        for batch in jobs.chunk_by(|a, b| a.1.degree() == b.1.degree()) {
            let frozen = &ech;
            let reduced = par::map(batch, |&(i, alpha)| {
                let mut row: Row<F> = gens[i]
                    .iter()
                    .filter(|(m, _)| m.degree() + alpha.degree() < level as u64)
                    .map(|(m, c)| {
                        let prod = m.checked_mul(alpha).expect("degrees bounded by level");
                        (self.col_of[&prod], c.clone())
                    })
                    .collect();
                row.sort_unstable_by_key(|x| x.0);
                frozen.reduce(row)
            });
            for row in reduced {
                ech.insert(row);
            }
        }
        let mut pivots_below = vec![0u64; level as usize + 1];
        for (c, p) in ech.pivots.iter().enumerate() {
            if p.is_some() {
                pivots_below[self.col_degree[c] as usize + 1] += 1;
            }
        }
        pivots_below
    }
}

/// Cronin's lemma: if the lowest forms `f_{j,m_j}` have only the trivial
/// common zero, then `π_f(0) = ∏ m_j`. Returns `None` otherwise.
///
/// The homogeneous system has only the trivial zero iff its graded quotient
/// vanishes in degree `Σ(m_j − 1) + 1`.
pub fn cronin(f: &GermMap) -> Result<Option<u64>> {
    let mut forms = Vec::with_capacity(f.nvars());
    for (i, p) in f.coords().iter().enumerate() {
        if p.is_zero() {
            return Err(Error::domain(format!(
                "coordinate f{} vanishes identically, so the zero is not isolated",
                i + 1
            )));
        }
        forms.push(p.lowest_form()?);
    }
    let n = f.nvars();
    if n == 0 {
        return Ok(Some(1));
    }
    let top: u64 = forms.iter().map(|(m, _)| m - 1).sum::<u64>() + 1;
    if top > u32::MAX as u64 {
        return Ok(None);
    }
    let homog: Vec<&Polynomial> = forms.iter().map(|(_, h)| h).collect();
    if graded_quotient_dim(n, &homog, top as u32) == 0 {
        Ok(Some(forms.iter().map(|(m, _)| *m).product()))
    } else {
        Ok(None)
    }
}

/// Dimension of the degree-`k` part of `K[x]/(h_1, …, h_r)` for homogeneous `h_j`.
pub fn graded_quotient_dim(n: usize, forms: &[&Polynomial], k: u32) -> u64 {
    if forms.iter().all(|h| h.is_rational()) {
        let gens: Vec<Vec<(Monomial, BigRational)>> = forms
            .iter()
            .map(|h| h.terms().map(|(m, c)| (m.clone(), c.as_rational().unwrap().clone())).collect())
            .collect();
        graded_dim_over(n, &gens, k)
    } else {
        let gens: Vec<Vec<(Monomial, CyclotomicNumber)>> = forms
            .iter()
            .map(|h| h.terms().map(|(m, c)| (m.clone(), c.clone())).collect())
            .collect();
        graded_dim_over(n, &gens, k)
    }
}

fn graded_dim_over<F: Field>(n: usize, gens: &[Vec<(Monomial, F)>], k: u32) -> u64 {
    let cols = monomials_of_degree(n, k);
    let col_of: HashMap<&Monomial, u32> = cols.iter().enumerate().map(|(i, m)| (m, i as u32)).collect();
    let mut ech = Echelon::<F>::new(cols.len());
    let mut rank = 0u64;
    for g in gens {
        let deg = match g.first() {
            Some((m, _)) => m.degree(),
            None => continue,
        };
        if deg > k as u64 {
            continue;
        }
        for alpha in monomials_of_degree(n, k - deg as u32) {
            let mut row: Row<F> = g
                .iter()
                .map(|(m, c)| (col_of[&m.checked_mul(&alpha).unwrap()], c.clone()))
                .collect();
            row.sort_unstable_by_key(|x| x.0);
            if ech.insert(row).is_some() {
                rank += 1;
            }
        }
    }
    cols.len() as u64 - rank
}

/// Builds the error for a failed stabilization, attaching a certificate of
/// non-isolation when a cheap one is found.
fn not_isolated(f: &GermMap, cap: u32) -> Error {
    Error::NotIsolatedWithinBound {
        cap,
        witness: non_isolation_witness(f),
    }
}

/// Looks for a curve through the origin on which every coordinate vanishes:
/// an identically zero coordinate, a variable dividing every coordinate, or a
/// coordinate axis.
pub fn non_isolation_witness(f: &GermMap) -> Option<String> {
    let n = f.nvars();
    if let Some(i) = f.coords().iter().position(Polynomial::is_zero) {
        return Some(format!("coordinate f{} vanishes identically", i + 1));
    }
    for j in 0..n {
        let v = Monomial::var(n, j);
        if f.coords().iter().all(|p| p.div_monomial(&v).is_some()) {
            return Some(format!("every coordinate vanishes on the hyperplane x{} = 0", j + 1));
        }
    }
    for j in 0..n {
        if f.coords().iter().all(|p| p.restrict(&[j]).is_zero()) {
            return Some(format!("every coordinate vanishes on the x{}-axis", j + 1));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipoly::testutil::{germ, poly};
    use proptest::prelude::*;

    fn mult(f: &GermMap) -> u64 {
        multiplicity(f, DEFAULT_DEGREE_CAP).unwrap().value
    }

    fn mult_general(f: &GermMap) -> u64 {
        multiplicity_general(f, DEFAULT_DEGREE_CAP).unwrap().value
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        assert_eq!(monomials_of_degree(2, 0), vec![Monomial::one(2)]);
        let ms = monomials_of_degree(2, 3);
        assert!(ms.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn spec_examples() {
        let f = germ(vec![poly(2, &[(1, &[2, 0])]), poly(2, &[(1, &[0, 3])])]);
        assert_eq!(mult(&f), 6);
        assert_eq!(mult_general(&f), 6);
        let f = germ(vec![poly(2, &[(1, &[1, 0])]), poly(2, &[(1, &[0, 1])])]);
        assert_eq!(mult_general(&f), 1);
        let f = germ(vec![poly(2, &[(1, &[2, 0])]), poly(2, &[(1, &[1, 1]), (1, &[0, 3])])]);
        assert_eq!(cronin(&f).unwrap(), None);
        assert_eq!(mult(&f), 6);
        let xy = poly(2, &[(1, &[1, 1])]);
        let f = germ(vec![xy.clone(), xy]);
        match multiplicity(&f, 20) {
            Err(Error::NotIsolatedWithinBound { cap: 20, witness: Some(w) }) => {
                assert!(w.contains("x1 = 0"), "{w}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cronin_examples() {
        let f = germ(vec![
            poly(2, &[(1, &[2, 0]), (1, &[0, 5])]),
            poly(2, &[(1, &[0, 3]), (1, &[4, 0])]),
        ]);
        assert_eq!(cronin(&f).unwrap(), Some(6));
        assert_eq!(mult_general(&f), 6);
        let f = germ(vec![
            poly(2, &[(1, &[2, 0]), (-1, &[0, 2])]),
            poly(2, &[(1, &[2, 0]), (1, &[0, 2])]),
        ]);
        assert_eq!(cronin(&f).unwrap(), Some(4));
        assert_eq!(mult_general(&f), 4);
        let f = germ(vec![poly(1, &[(1, &[3])]), Polynomial::zero(1, 1)].into_iter().take(1).collect());
        assert_eq!(cronin(&f).unwrap(), Some(3));
        let z = GermMap::new(vec![poly(2, &[(1, &[1, 0])]), Polynomial::zero(2, 1)], 1).unwrap();
        assert!(cronin(&z).is_err());
    }

    #[test]
    fn truncated_dims() {
        let f = germ(vec![poly(2, &[(1, &[2, 0])]), poly(2, &[(1, &[0, 2])])]);
        assert_eq!(truncated_quotient_dim(&f, 3), 4);
        assert_eq!(truncated_quotient_dim(&f, 4), 4);
        assert_eq!(truncated_quotient_dim(&f, 1), 1);
        let r = multiplicity_general(&f, 64).unwrap();
        assert_eq!(r.quotient_dims, vec![1, 3, 4, 4]);
        assert_eq!(r.stabilization_degree, 3);
    }

    #[test]
    fn empty_germ_has_multiplicity_one() {
        assert_eq!(mult(&GermMap::empty(1)), 1);
    }

    #[test]
    fn cyclotomic_coefficients() {
        use crate::exactnum::root_of_unity;
        // (x^2 − ζ3 y^3 + x y, y^2 + x^3)
        let z = root_of_unity(3, 1, 3).unwrap();
        let one = CyclotomicNumber::one(3);
        let p1 = Polynomial::from_terms(
            2,
            3,
            [
                (Monomial::new(vec![2, 0]), one.clone()),
                (Monomial::new(vec![0, 3]), -&z),
                (Monomial::new(vec![1, 1]), z.clone()),
            ],
        );
        let p2 = Polynomial::from_terms(
            2,
            3,
            [(Monomial::new(vec![0, 2]), one.clone()), (Monomial::new(vec![3, 0]), one)],
        );
        let f = GermMap::new(vec![p1, p2], 3).unwrap();
        assert_eq!(mult(&f), 4);
        assert_eq!(mult_general(&f), 4);
    }

    #[test]
    fn certificate_is_stable() {
        let f = germ(vec![
            poly(2, &[(1, &[2, 0]), (1, &[1, 1]), (1, &[0, 4])]),
            poly(2, &[(1, &[1, 2]), (1, &[5, 0])]),
        ]);
        let r = multiplicity_general(&f, 64).unwrap();
        let later = truncated_quotient_dim(&f, r.stabilization_degree + 2);
        assert_eq!(later, r.value);
        assert_eq!(r.value, mult(&f));
    }

    #[test]
    fn grading_cosets() {
        // x^2 - y^3 and x*y: lattice spanned by (-2, 3)
        let gens: Vec<Vec<(Monomial, BigRational)>> = vec![
            vec![
                (Monomial::new(vec![2, 0]), BigRational::from_integer(1.into())),
                (Monomial::new(vec![0, 3]), BigRational::from_integer((-1).into())),
            ],
            vec![(Monomial::new(vec![1, 1]), BigRational::from_integer(1.into()))],
        ];
        let g = Grading::detect(2, &gens);
        assert_eq!(g.class(&[2, 0]), g.class(&[0, 3]));
        assert_eq!(g.class(&[4, 0]), g.class(&[0, 6]));
        assert_ne!(g.class(&[1, 0]), g.class(&[0, 1]));
        assert_ne!(g.class(&[1, 0]), g.class(&[0, 0]));
    }

    fn small_germ() -> impl Strategy<Value = Vec<Vec<(Monomial, BigRational)>>> {
        let term = (prop::collection::vec(0u32..4, 2), -3i64..=3)
            .prop_map(|(e, c)| (Monomial::new(e), BigRational::from_integer(c.into())));
        prop::collection::vec(prop::collection::vec(term, 1..4), 2)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn graded_split_matches_single_block(gens in small_germ()) {
            let gens: Vec<Vec<(Monomial, BigRational)>> = gens
                .into_iter()
                .map(|g| {
                    let mut t: std::collections::BTreeMap<Monomial, BigRational> = Default::default();
                    for (m, c) in g {
                        if !m.is_one() {
                            *t.entry(m).or_insert_with(|| BigRational::from_integer(0.into())) += c;
                        }
                    }
                    t.into_iter().filter(|(_, c)| *c != BigRational::from_integer(0.into())).collect()
                })
                .collect();
            let split = quotient_dims_over(2, &gens, 7);
            let whole = quotient_dims_graded(2, &gens, 7, &Grading { basis: None });
            prop_assert_eq!(split, whole);
        }
    }
}
