//! Sparse multivariate polynomials over `Q(ζ_M)` and polynomial germ maps.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::exactnum::CyclotomicNumber;
use crate::par;

/// Default cap on the number of terms any intermediate polynomial may hold.
pub const DEFAULT_TERM_LIMIT: usize = 2_000_000;

/// Exponent vector `x_1^{e_1} ⋯ x_n^{e_n}`.
///
/// Ordered graded reverse lexicographically, ascending: lower total degree
/// first; within a degree, the monomial with the larger exponent in the last
/// differing variable comes first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, j: usize) -> Self {
        let mut e = vec![0; nvars];
        e[j] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| e as u64).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn checked_mul(&self, other: &Monomial) -> Result<Monomial> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                a.checked_add(*b)
                    .ok_or_else(|| Error::domain("exponent overflow in monomial product"))
            })
            .collect::<Result<Vec<_>>>()
            .map(Monomial)
    }

    /// `self / other` when `other` divides `self`.
    pub fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        for (a, b) in self.0.iter().zip(&other.0).rev() {
            if a != b {
                // larger exponent in the last variable is grevlex-smaller
                return b.cmp(a);
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "x{}", j + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Sparse polynomial in `nvars` variables with coefficients in `Q(ζ_M)`.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    modulus: u32,
    terms: BTreeMap<Monomial, CyclotomicNumber>,
}

impl Polynomial {
    pub fn zero(nvars: usize, modulus: u32) -> Self {
        Polynomial {
            nvars,
            modulus,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: CyclotomicNumber) -> Self {
        Self::monomial(Monomial::one(nvars), c)
    }

    pub fn monomial(m: Monomial, c: CyclotomicNumber) -> Self {
        let mut p = Polynomial::zero(m.nvars(), c.modulus());
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn var(nvars: usize, modulus: u32, j: usize) -> Self {
        Self::monomial(Monomial::var(nvars, j), CyclotomicNumber::one(modulus))
    }

    /// Build from a term list, summing repeated monomials.
    pub fn from_terms(
        nvars: usize,
        modulus: u32,
        terms: impl IntoIterator<Item = (Monomial, CyclotomicNumber)>,
    ) -> Self {
        let mut p = Polynomial::zero(nvars, modulus);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded reverse lexicographic order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &CyclotomicNumber)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&CyclotomicNumber> {
        self.terms.get(m)
    }

    pub fn add_term(&mut self, m: Monomial, c: CyclotomicNumber) {
        debug_assert_eq!(m.nvars(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = &*o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_compatible(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::domain(format!(
                "polynomial variable count mismatch: {} vs {}",
                self.nvars, other.nvars
            )));
        }
        if self.modulus != other.modulus {
            return Err(Error::domain("polynomial coefficient field mismatch"));
        }
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            modulus: self.modulus,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &CyclotomicNumber) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars, self.modulus);
        }
        Polynomial {
            nvars: self.nvars,
            modulus: self.modulus,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.mul_truncated(other, None, DEFAULT_TERM_LIMIT)
    }

    /// Product with every term of total degree `>= cap` dropped.
    pub fn mul_truncated(
        &self,
        other: &Polynomial,
        cap: Option<u64>,
        term_limit: usize,
    ) -> Result<Polynomial> {
        self.check_compatible(other)?;
        let mut acc: HashMap<Monomial, CyclotomicNumber> = HashMap::new();
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            if cap.is_some_and(|d| da >= d) {
                // terms are degree-sorted
                break;
            }
            for (mb, cb) in &other.terms {
                if cap.is_some_and(|d| da + mb.degree() >= d) {
                    break;
                }
                let m = ma.checked_mul(mb)?;
                let c = ca * cb;
                match acc.get_mut(&m) {
                    Some(v) => *v = &*v + &c,
                    None => {
                        acc.insert(m, c);
                    }
                }
                if acc.len() > term_limit {
                    return Err(Error::TermExplosion {
                        limit: term_limit,
                        context: "polynomial multiplication".into(),
                    });
                }
            }
        }
        Ok(Polynomial {
            nvars: self.nvars,
            modulus: self.modulus,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        })
    }

    /// Drops every term of total degree `>= d`.
    pub fn truncate(&self, d: u64) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            modulus: self.modulus,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() < d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Lowest total degree `m` and the homogeneous sum of all degree-`m` terms.
    pub fn lowest_form(&self) -> Result<(u64, Polynomial)> {
        let (first, _) = self
            .terms
            .iter()
            .next()
            .ok_or_else(|| Error::domain("lowest form of the zero polynomial"))?;
        let m = first.degree();
        Ok((m, self.homogeneous_part(m)))
    }

    pub fn homogeneous_part(&self, deg: u64) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            modulus: self.modulus,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == deg)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn order(&self) -> Option<u64> {
        self.terms.keys().next().map(Monomial::degree)
    }

    pub fn degree(&self) -> Option<u64> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    pub fn constant_term(&self) -> Option<&CyclotomicNumber> {
        self.terms.get(&Monomial::one(self.nvars))
    }

    pub fn is_homogeneous(&self) -> bool {
        match (self.order(), self.degree()) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        }
    }

    /// Substitutes `x_j ↦ x_j^{powers_j}`.
    pub fn substitute_powers(&self, powers: &[u32]) -> Result<Polynomial> {
        if powers.len() != self.nvars {
            return Err(Error::domain("power vector length differs from variable count"));
        }
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m
                .0
                .iter()
                .zip(powers)
                .map(|(&e, &k)| {
                    e.checked_mul(k)
                        .ok_or_else(|| Error::domain("exponent overflow in power substitution"))
                })
                .collect::<Result<Vec<_>>>()?;
            terms.insert(Monomial(e), c.clone());
        }
        Ok(Polynomial {
            nvars: self.nvars,
            modulus: self.modulus,
            terms,
        })
    }

    /// Sets every variable outside `keep` to zero and renumbers the kept
    /// variables in increasing order.
    pub fn restrict(&self, keep: &[usize]) -> Polynomial {
        let mut terms = BTreeMap::new();
        'terms: for (m, c) in &self.terms {
            for (j, &e) in m.0.iter().enumerate() {
                if e > 0 && !keep.contains(&j) {
                    continue 'terms;
                }
            }
            let e: Vec<u32> = keep.iter().map(|&j| m.0[j]).collect();
            terms.insert(Monomial(e), c.clone());
        }
        Polynomial {
            nvars: keep.len(),
            modulus: self.modulus,
            terms,
        }
    }

    /// Divides by the monomial `m`, failing if some term is not divisible.
    pub fn div_monomial(&self, m: &Monomial) -> Option<Polynomial> {
        let mut terms = BTreeMap::new();
        for (t, c) in &self.terms {
            terms.insert(t.checked_div(m)?, c.clone());
        }
        Some(Polynomial {
            nvars: self.nvars,
            modulus: self.modulus,
            terms,
        })
    }

    pub fn uses_only(&self, vars: &[usize]) -> bool {
        self.terms.keys().all(|m| {
            m.0.iter()
                .enumerate()
                .all(|(j, &e)| e == 0 || vars.contains(&j))
        })
    }

    pub fn is_rational(&self) -> bool {
        self.terms.values().all(CyclotomicNumber::is_rational)
    }

    /// Evaluates at polynomial arguments (`self ∘ args`), truncating at `cap`.
    pub fn compose_with(
        &self,
        args: &[Polynomial],
        cap: Option<u64>,
        term_limit: usize,
    ) -> Result<Polynomial> {
        if args.len() != self.nvars {
            return Err(Error::domain("composition argument count mismatch"));
        }
        let target_nvars = args.first().map(|p| p.nvars).unwrap_or(0);
        let mut powers = PowerCache::new(args, cap, term_limit);
        let mut out = Polynomial::zero(target_nvars, self.modulus);
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(target_nvars, c.clone());
            for (j, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let pw = powers.get(j, e)?;
                term = term.mul_truncated(pw, cap, term_limit)?;
                if term.is_zero() {
                    break;
                }
            }
            for (tm, tc) in term.terms {
                out.add_term(tm, tc);
            }
            if out.len() > term_limit {
                return Err(Error::TermExplosion {
                    limit: term_limit,
                    context: "composition".into(),
                });
            }
        }
        Ok(out)
    }
}

struct PowerCache<'a> {
    base: &'a [Polynomial],
    cap: Option<u64>,
    term_limit: usize,
    cache: HashMap<(usize, u32), Polynomial>,
}

impl<'a> PowerCache<'a> {
    fn new(base: &'a [Polynomial], cap: Option<u64>, term_limit: usize) -> Self {
        PowerCache {
            base,
            cap,
            term_limit,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, j: usize, e: u32) -> Result<&Polynomial> {
        if !self.cache.contains_key(&(j, e)) {
            let p = if e == 1 {
                match self.cap {
                    Some(d) => self.base[j].truncate(d),
                    None => self.base[j].clone(),
                }
            } else {
                let half = e / 2;
                let a = self.get(j, half)?.clone();
                let mut p = a.mul_truncated(&a, self.cap, self.term_limit)?;
                if e % 2 == 1 {
                    let one = self.get(j, 1)?.clone();
                    p = p.mul_truncated(&one, self.cap, self.term_limit)?;
                }
                p
            };
            self.cache.insert((j, e), p);
        }
        Ok(&self.cache[&(j, e)])
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})*{m}")?;
        }
        Ok(())
    }
}

/// Square matrix over `Q(ζ_M)`, row-major.
pub type Matrix = Vec<Vec<CyclotomicNumber>>;

/// A polynomial map `(C^n, 0) → (C^n, 0)`.
#[derive(Clone, PartialEq, Eq)]
pub struct GermMap {
    nvars: usize,
    modulus: u32,
    coords: Vec<Polynomial>,
}

impl GermMap {
    pub fn new(coords: Vec<Polynomial>, modulus: u32) -> Result<Self> {
        let nvars = coords.len();
        for (i, p) in coords.iter().enumerate() {
            if p.nvars != nvars {
                return Err(Error::domain(format!(
                    "coordinate f{} has {} variables, expected {nvars}",
                    i + 1,
                    p.nvars
                )));
            }
            if p.modulus != modulus {
                return Err(Error::domain("coordinate coefficient field mismatch"));
            }
            if p.constant_term().is_some() {
                return Err(Error::domain(format!(
                    "coordinate f{} has a nonzero constant term",
                    i + 1
                )));
            }
        }
        Ok(GermMap {
            nvars,
            modulus,
            coords,
        })
    }

    /// The empty germ on `C^0`.
    pub fn empty(modulus: u32) -> Self {
        GermMap {
            nvars: 0,
            modulus,
            coords: vec![],
        }
    }

    pub fn identity(nvars: usize, modulus: u32) -> Self {
        GermMap {
            nvars,
            modulus,
            coords: (0..nvars).map(|j| Polynomial::var(nvars, modulus, j)).collect(),
        }
    }

    /// The linear germ `x ↦ A x`.
    pub fn linear(a: &Matrix, modulus: u32) -> Self {
        let n = a.len();
        let coords = a
            .iter()
            .map(|row| {
                Polynomial::from_terms(
                    n,
                    modulus,
                    row.iter()
                        .enumerate()
                        .map(|(j, c)| (Monomial::var(n, j), c.clone())),
                )
            })
            .collect();
        GermMap {
            nvars: n,
            modulus,
            coords,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn coords(&self) -> &[Polynomial] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &Polynomial {
        &self.coords[i]
    }

    pub fn into_coords(self) -> Vec<Polynomial> {
        self.coords
    }

    pub fn is_rational(&self) -> bool {
        self.coords.iter().all(Polynomial::is_rational)
    }

    pub fn sub(&self, other: &GermMap) -> Result<GermMap> {
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        GermMap::new(coords, self.modulus)
    }

    /// `f − id`.
    pub fn minus_identity(&self) -> GermMap {
        self.sub(&GermMap::identity(self.nvars, self.modulus))
            .expect("same shape")
    }

    /// Matrix of degree-one coefficients.
    pub fn linear_part(&self) -> Matrix {
        let n = self.nvars;
        self.coords
            .iter()
            .map(|p| {
                (0..n)
                    .map(|j| {
                        p.coeff(&Monomial::var(n, j))
                            .cloned()
                            .unwrap_or_else(|| CyclotomicNumber::zero(self.modulus))
                    })
                    .collect()
            })
            .collect()
    }

    /// `self ∘ g`.
    pub fn compose(&self, g: &GermMap) -> Result<GermMap> {
        self.compose_truncated(g, None, DEFAULT_TERM_LIMIT)
    }

    pub fn compose_truncated(
        &self,
        g: &GermMap,
        cap: Option<u64>,
        term_limit: usize,
    ) -> Result<GermMap> {
        if self.nvars != g.nvars {
            return Err(Error::domain("composition of germs of different dimension"));
        }
        let coords = par::map(&self.coords, |p| p.compose_with(&g.coords, cap, term_limit))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(GermMap {
            nvars: self.nvars,
            modulus: self.modulus,
            coords,
        })
    }

    /// `f^q` by repeated composition, optionally dropping terms of degree `>= cap`
    /// after each step.
    pub fn iterate(&self, q: u32, cap: Option<u64>, term_limit: usize) -> Result<GermMap> {
        if q == 0 {
            return Err(Error::domain("iterate count must be positive"));
        }
        let base = match cap {
            Some(d) => self.truncate(d),
            None => self.clone(),
        };
        let mut acc = base.clone();
        for _ in 1..q {
            acc = base.compose_truncated(&acc, cap, term_limit)?;
        }
        Ok(acc)
    }

    pub fn truncate(&self, d: u64) -> GermMap {
        GermMap {
            nvars: self.nvars,
            modulus: self.modulus,
            coords: self.coords.iter().map(|p| p.truncate(d)).collect(),
        }
    }

    pub fn substitute_powers(&self, powers: &[u32]) -> Result<GermMap> {
        let coords = self
            .coords
            .iter()
            .map(|p| p.substitute_powers(powers))
            .collect::<Result<Vec<_>>>()?;
        Ok(GermMap {
            nvars: self.nvars,
            modulus: self.modulus,
            coords,
        })
    }

    /// Replaces coordinate `i`.
    pub fn with_coord(&self, i: usize, p: Polynomial) -> Result<GermMap> {
        let mut coords = self.coords.clone();
        coords[i] = p;
        GermMap::new(coords, self.modulus)
    }

    /// Left-multiplies the coordinate vector by a constant matrix.
    pub fn left_mul(&self, a: &Matrix) -> Result<GermMap> {
        let coords = a
            .iter()
            .map(|row| {
                let mut acc = Polynomial::zero(self.nvars, self.modulus);
                for (c, p) in row.iter().zip(&self.coords) {
                    acc = acc.add(&p.scale(c))?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        GermMap::new(coords, self.modulus)
    }
}

impl fmt::Debug for GermMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

pub fn matrix_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b.first().map(Vec::len).unwrap_or(0);
    let modulus = a
        .first()
        .and_then(|r| r.first())
        .map(CyclotomicNumber::modulus)
        .unwrap_or(1);
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = CyclotomicNumber::zero(modulus);
                    for (k, bk) in b.iter().enumerate() {
                        acc = &acc + &(&a[i][k] * &bk[j]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::exactnum::rat_int;

    /// Parses a tiny test notation: a list of (coefficient, exponents) pairs.
    pub fn poly(nvars: usize, terms: &[(i64, &[u32])]) -> Polynomial {
        Polynomial::from_terms(
            nvars,
            1,
            terms.iter().map(|(c, e)| {
                assert_eq!(e.len(), nvars);
                (
                    Monomial::new(e.to_vec()),
                    CyclotomicNumber::from_rational(1, rat_int(*c)),
                )
            }),
        )
    }

    pub fn germ(coords: Vec<Polynomial>) -> GermMap {
        GermMap::new(coords, 1).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use crate::exactnum::root_of_unity;

    #[test]
    fn grevlex_order() {
        let a = Monomial::new(vec![2, 0, 0]);
        let b = Monomial::new(vec![1, 1, 0]);
        let c = Monomial::new(vec![0, 0, 2]);
        let d = Monomial::new(vec![1, 0, 0]);
        // degree first
        assert!(d < a);
        // x1^2 > x1x2 > ... > x3^2 in grevlex, so ascending puts x3^2 first
        assert!(c < b && b < a);
    }

    #[test]
    fn arithmetic() {
        let s = poly(2, &[(1, &[1, 0]), (1, &[0, 1])]);
        let d = poly(2, &[(1, &[1, 0]), (-1, &[0, 1])]);
        let expect = poly(2, &[(1, &[2, 0]), (-1, &[0, 2])]);
        assert_eq!(s.mul(&d).unwrap(), expect);
        assert!(s.mul(&Polynomial::zero(2, 1)).unwrap().is_zero());
        let a = poly(2, &[(1, &[2, 0]), (1, &[0, 3])]);
        let b = poly(2, &[(1, &[2, 0])]);
        assert_eq!(a.sub(&b).unwrap(), poly(2, &[(1, &[0, 3])]));
        assert!(a.add(&poly(3, &[(1, &[1, 0, 0])])).is_err());
    }

    #[test]
    fn self_composition_of_cubic() {
        let f = germ(vec![poly(1, &[(-1, &[1]), (1, &[3])])]);
        let ff = f.compose(&f).unwrap();
        let expect = poly(
            1,
            &[(1, &[1]), (-2, &[3]), (3, &[5]), (-3, &[7]), (1, &[9])],
        );
        assert_eq!(ff.coord(0), &expect);
        assert_eq!(f.iterate(2, None, DEFAULT_TERM_LIMIT).unwrap(), ff);
        assert_eq!(f.iterate(1, None, DEFAULT_TERM_LIMIT).unwrap(), f);
    }

    #[test]
    fn linear_iterates_and_linear_part() {
        let m = 6;
        let z = root_of_unity(6, 1, m).unwrap();
        let one = CyclotomicNumber::one(m);
        let zero = CyclotomicNumber::zero(m);
        let lam = vec![vec![z.clone(), one.clone()], vec![zero.clone(), z.clone()]];
        let f = GermMap::linear(&lam, m);
        let f3 = f.iterate(3, None, DEFAULT_TERM_LIMIT).unwrap();
        let lam3 = matrix_mul(&lam, &matrix_mul(&lam, &lam));
        assert_eq!(f3.linear_part(), lam3);

        // f = (ζ6 x1 + x2, ζ6 x2 + x1^7)
        let mut c1 = f.coord(1).clone();
        c1.add_term(Monomial::new(vec![7, 0]), one.clone());
        let g = f.with_coord(1, c1).unwrap();
        assert_eq!(g.linear_part(), lam);
        let gi = g.minus_identity().linear_part();
        assert_eq!(gi[0][0], &z - &one);
        assert_eq!(gi[0][1], one);
        assert_eq!(gi[1][0], zero);
    }

    #[test]
    fn substitution_truncation_lowest_form() {
        let p = poly(2, &[(1, &[1, 3])]);
        assert_eq!(p.substitute_powers(&[2, 1]).unwrap(), poly(2, &[(1, &[2, 3])]));
        let q = poly(2, &[(1, &[2, 0]), (1, &[0, 3])]);
        assert_eq!(q.substitute_powers(&[1, 1]).unwrap(), q);
        assert_eq!(
            q.substitute_powers(&[3, 2]).unwrap(),
            poly(2, &[(1, &[6, 0]), (1, &[0, 6])])
        );

        let c = poly(1, &[(1, &[1]), (1, &[3])]);
        assert_eq!(c.truncate(3), poly(1, &[(1, &[1])]));
        assert!(c.truncate(1).is_zero());
        let r = poly(2, &[(1, &[1, 3]), (1, &[3, 0])]);
        assert_eq!(r.truncate(4), poly(2, &[(1, &[3, 0])]));

        let (m, h) = poly(1, &[(1, &[2]), (1, &[5])]).lowest_form().unwrap();
        assert_eq!((m, h), (2, poly(1, &[(1, &[2])])));
        let (m, h) = poly(2, &[(3, &[1, 1]), (1, &[3, 0])]).lowest_form().unwrap();
        assert_eq!((m, h), (2, poly(2, &[(3, &[1, 1])])));
        let (m, h) = q.lowest_form().unwrap();
        assert_eq!((m, h), (2, poly(2, &[(1, &[2, 0])])));
        assert!(Polynomial::zero(2, 1).lowest_form().is_err());
    }

    #[test]
    fn exponent_overflow_is_an_error() {
        let p = poly(1, &[(1, &[u32::MAX / 2 + 1])]);
        assert!(p.substitute_powers(&[2]).is_err());
        assert!(p.mul(&p).is_err());
    }

    #[test]
    fn term_limit_guard() {
        let p = poly(3, &[(1, &[1, 0, 0]), (1, &[0, 1, 0]), (1, &[0, 0, 1])]);
        let mut acc = p.clone();
        let mut hit = false;
        for _ in 0..10 {
            match acc.mul_truncated(&p, None, 30) {
                Ok(x) => acc = x,
                Err(Error::TermExplosion { .. }) => {
                    hit = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(hit);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_poly(nvars: usize) -> impl Strategy<Value = Polynomial> {
            proptest::collection::vec(
                (-3i64..=3, proptest::collection::vec(0u32..=3, nvars)),
                0..5,
            )
            .prop_map(move |ts| {
                let terms: Vec<(i64, Vec<u32>)> = ts;
                let refs: Vec<(i64, &[u32])> =
                    terms.iter().map(|(c, e)| (*c, e.as_slice())).collect();
                poly(nvars, &refs)
            })
        }

        fn small_germ() -> impl Strategy<Value = GermMap> {
            (small_poly(2), small_poly(2)).prop_map(|(a, b)| {
                let strip = |p: Polynomial| {
                    Polynomial::from_terms(
                        2,
                        1,
                        p.terms()
                            .filter(|(m, _)| !m.is_one())
                            .map(|(m, c)| (m.clone(), c.clone())),
                    )
                };
                germ(vec![strip(a), strip(b)])
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn compose_associative_under_truncation(f in small_germ(), g in small_germ(), h in small_germ()) {
                let cap = Some(6);
                let l = 1_000_000;
                let left = h.compose_truncated(&g, cap, l).unwrap().compose_truncated(&f, cap, l).unwrap();
                let right = h.compose_truncated(&g.compose_truncated(&f, cap, l).unwrap(), cap, l).unwrap();
                prop_assert_eq!(left, right);
            }

            #[test]
            fn linear_part_is_multiplicative(f in small_germ(), g in small_germ()) {
                let fg = f.compose(&g).unwrap();
                prop_assert_eq!(fg.linear_part(), matrix_mul(&f.linear_part(), &g.linear_part()));
            }

            #[test]
            fn power_substitution_composes(p in small_poly(2), a in proptest::collection::vec(1u32..4, 2), b in proptest::collection::vec(1u32..4, 2)) {
                let ab: Vec<u32> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
                let lhs = p.substitute_powers(&a).unwrap().substitute_powers(&b).unwrap();
                prop_assert_eq!(lhs, p.substitute_powers(&ab).unwrap());
                prop_assert_eq!(p.substitute_powers(&a).unwrap().len(), p.len());
            }

            #[test]
            fn truncation_splits_by_degree(p in small_poly(2), d in 1u64..8) {
                let t = p.truncate(d);
                for (m, c) in p.terms() {
                    if m.degree() < d {
                        prop_assert_eq!(t.coeff(m), Some(c));
                    } else {
                        prop_assert!(t.coeff(m).is_none());
                    }
                }
                prop_assert!(t.terms().all(|(m, _)| m.degree() < d));
            }
        }
    }
}
