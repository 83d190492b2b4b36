//! Combinatorial data of a Jordan matrix with root-of-unity eigenvalues.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactnum::{gcd_u64, lcm_u64, root_of_unity, CyclotomicNumber};
use crate::multipoly::Matrix;

/// One Jordan block: size `k`, eigenvalue `e^{2πi r/d}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct JordanBlock {
    pub size: u32,
    pub order: u32,
    pub power: u32,
}

impl JordanBlock {
    pub fn new(size: u32, order: u32, power: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::domain(
                "block order 0 (eigenvalue not a root of unity) is not supported",
            ));
        }
        if size == 0 {
            return Err(Error::domain("block size must be positive"));
        }
        if power == 0 || power > order {
            return Err(Error::domain(format!(
                "block power {power} must lie in 1..={order}"
            )));
        }
        if gcd_u64(power as u64, order as u64) != 1 {
            return Err(Error::domain(format!(
                "block power {power} is not coprime to order {order}"
            )));
        }
        Ok(JordanBlock { size, order, power })
    }

    /// Block with size 1.
    pub fn simple(order: u32, power: u32) -> Result<Self> {
        Self::new(1, order, power)
    }
}

/// The matrix `Λ` as an ordered list of Jordan blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JordanSpec {
    blocks: Vec<JordanBlock>,
    offsets: Vec<usize>,
}

impl JordanSpec {
    pub fn new(blocks: Vec<JordanBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::domain("a Jordan matrix needs at least one block"));
        }
        let mut offsets = vec![0usize];
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.size as usize);
        }
        let spec = JordanSpec { blocks, offsets };
        if spec.global_order() > u32::MAX as u64 {
            return Err(Error::domain("global order does not fit in 32 bits"));
        }
        Ok(spec)
    }

    /// Convenience constructor from `(size, order, power)` triples.
    pub fn from_triples(triples: &[(u32, u32, u32)]) -> Result<Self> {
        let blocks = triples
            .iter()
            .map(|&(k, d, r)| JordanBlock::new(k, d, r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[JordanBlock] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Dimension `n = Σ k_j`.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// `s_0 = 0, s_j = k_1 + … + k_j`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Block index (0-based) of coordinate `j` (0-based).
    pub fn theta(&self, j: usize) -> usize {
        debug_assert!(j < self.dim());
        self.offsets.partition_point(|&s| s <= j) - 1
    }

    /// First coordinate of block `t`.
    pub fn lead(&self, t: usize) -> usize {
        self.offsets[t]
    }

    /// Last coordinate of block `t`.
    pub fn last(&self, t: usize) -> usize {
        self.offsets[t + 1] - 1
    }

    /// `M(Λ) = lcm(d_1, …, d_m)`.
    pub fn global_order(&self) -> u64 {
        self.blocks
            .iter()
            .fold(1, |acc, b| lcm_u64(acc, b.order as u64))
    }

    pub fn modulus(&self) -> u32 {
        self.global_order() as u32
    }

    /// `PE(Λ)`: lcms of all nonempty sets of block orders.
    pub fn period_set(&self) -> BTreeSet<u64> {
        let mut set = BTreeSet::new();
        for b in &self.blocks {
            let d = b.order as u64;
            let mut next: BTreeSet<u64> = set.iter().map(|&x| lcm_u64(x, d)).collect();
            next.insert(d);
            set.extend(next);
        }
        set
    }

    /// `w(Λ, l)`: coordinate `j` is selected iff `d_{θ(j)} | l`.
    pub fn word_mask(&self, l: u64) -> WordMask {
        let mut bits = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            let on = l % b.order as u64 == 0;
            bits.extend(std::iter::repeat(on).take(b.size as usize));
        }
        WordMask { bits }
    }

    /// Eigenvalue of block `t` in `Q(ζ_M)`.
    pub fn eigenvalue(&self, t: usize, modulus: u32) -> Result<CyclotomicNumber> {
        let b = self.blocks[t];
        root_of_unity(b.order, b.power as i64, modulus)
    }

    /// Residue `ρ(j)` with `λ_{θ(j)} = ζ_M^{ρ(j)}`.
    pub fn residue(&self, j: usize) -> u64 {
        let b = self.blocks[self.theta(j)];
        let m = self.global_order();
        (b.power as u64 * (m / b.order as u64)) % m
    }

    /// The matrix itself over `Q(ζ_M)`.
    pub fn matrix(&self) -> Matrix {
        self.matrix_in(self.modulus()).expect("M(Λ) is a multiple of every order")
    }

    /// The matrix over `Q(ζ_m)` for a multiple `m` of `M(Λ)`.
    pub fn matrix_in(&self, m: u32) -> Result<Matrix> {
        if m as u64 % self.global_order() != 0 {
            return Err(Error::domain(format!(
                "Q(ζ_{m}) does not contain the eigenvalues of {self}"
            )));
        }
        let n = self.dim();
        let mut a = vec![vec![CyclotomicNumber::zero(m); n]; n];
        for t in 0..self.blocks.len() {
            let lam = self.eigenvalue(t, m)?;
            for j in self.lead(t)..=self.last(t) {
                a[j][j] = lam.clone();
                if j < self.last(t) {
                    a[j][j + 1] = CyclotomicNumber::one(m);
                }
            }
        }
        Ok(a)
    }

    /// The same blocks in a different order.
    pub fn permuted(&self, order: &[usize]) -> Result<JordanSpec> {
        JordanSpec::new(order.iter().map(|&i| self.blocks[i]).collect())
    }

    /// Parses `[(k,d,r);(k,d,r);…]`.
    pub fn parse_inline(text: &str) -> Result<Self> {
        InlineParser::new(text).parse()
    }
}

impl fmt::Display for JordanSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "({},{},{})", b.size, b.order, b.power)?;
        }
        write!(f, "]")
    }
}

struct InlineParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> InlineParser<'a> {
    fn new(text: &'a str) -> Self {
        InlineParser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: 1,
            column: self.pos + 1,
            message: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn int(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a non-negative integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Parse {
                line: 1,
                column: start + 1,
                message: "integer out of range".into(),
            })
    }

    fn parse(mut self) -> Result<JordanSpec> {
        self.expect(b'[')?;
        let mut blocks = Vec::new();
        loop {
            let start = self.pos;
            self.expect(b'(')?;
            let k = self.int()?;
            self.expect(b',')?;
            let d = self.int()?;
            self.expect(b',')?;
            let r = self.int()?;
            self.expect(b')')?;
            blocks.push(JordanBlock::new(k, d, r).map_err(|e| Error::Parse {
                line: 1,
                column: start + 1,
                message: e.to_string(),
            })?);
            match self.peek() {
                Some(b';') => self.pos += 1,
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.err("expected ';' or ']'")),
            }
        }
        if self.peek().is_some() {
            return Err(self.err("trailing input after matrix"));
        }
        JordanSpec::new(blocks).map_err(|e| Error::Parse {
            line: 1,
            column: 1,
            message: e.to_string(),
        })
    }
}

/// A word of 0s and 1s selecting coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WordMask {
    bits: Vec<bool>,
}

impl WordMask {
    pub fn new(bits: Vec<bool>) -> Self {
        WordMask { bits }
    }

    pub fn all_ones(n: usize) -> Self {
        WordMask {
            bits: vec![true; n],
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `|w|`.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_zero(&self) -> bool {
        self.weight() == 0
    }

    /// `S(w)`, increasing.
    pub fn support(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect()
    }

    pub fn is_subset_of(&self, other: &WordMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }
}

impl fmt::Display for WordMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// A finite description of a sequence `{a_q}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SequenceTarget {
    entries: BTreeMap<u64, u64>,
}

impl SequenceTarget {
    pub fn new(entries: BTreeMap<u64, u64>) -> Self {
        SequenceTarget { entries }
    }

    pub fn from_pairs(pairs: &[(u64, u64)]) -> Self {
        SequenceTarget {
            entries: pairs.iter().copied().collect(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<u64, u64> {
        &self.entries
    }

    /// `a_q`, filling unlisted entries with the forced values.
    pub fn value(&self, q: u64, spec: &JordanSpec) -> u64 {
        match self.entries.get(&q) {
            Some(&v) => v,
            None if q == 1 && !spec.period_set().contains(&1) => 1,
            None => 0,
        }
    }

    /// The full sequence on `PE(Λ) ∪ {1}`.
    pub fn completed(&self, spec: &JordanSpec) -> BTreeMap<u64, u64> {
        let mut keys = spec.period_set();
        keys.insert(1);
        keys.into_iter().map(|q| (q, self.value(q, spec))).collect()
    }

    /// Parses `"1:1,2:2,6:3"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut column = 1;
        for part in text.split(',') {
            let perr = |msg: &str| Error::Parse {
                line: 1,
                column,
                message: msg.to_string(),
            };
            let trimmed = part.trim();
            if !trimmed.is_empty() {
                let (q, a) = trimmed
                    .split_once(':')
                    .ok_or_else(|| perr("expected q:a"))?;
                let q: u64 = q.trim().parse().map_err(|_| perr("bad period"))?;
                let a: u64 = a.trim().parse().map_err(|_| perr("bad count"))?;
                if q == 0 {
                    return Err(perr("period must be positive"));
                }
                if entries.insert(q, a).is_some() {
                    return Err(perr("duplicate period"));
                }
            }
            column += part.len() + 1;
        }
        Ok(SequenceTarget { entries })
    }
}

impl fmt::Display for SequenceTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (q, a)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}:{a}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub violation: Option<String>,
}

pub fn is_admissible(spec: &JordanSpec, target: &SequenceTarget) -> Admissibility {
    let pe = spec.period_set();
    let fail = |msg: String| Admissibility {
        admissible: false,
        violation: Some(msg),
    };
    let a1 = target.value(1, spec);
    if pe.contains(&1) {
        if a1 < 2 {
            return fail(format!("a_1 = {a1} but 1 is a period, so a_1 >= 2 is required"));
        }
    } else if a1 != 1 {
        return fail(format!("a_1 = {a1} but 1 is not a period, so a_1 = 1 is required"));
    }
    for &q in pe.iter().filter(|&&q| q != 1) {
        let a = target.value(q, spec);
        if a == 0 {
            return fail(format!("a_{q} = 0 but {q} is a period, so a_{q} >= 1 is required"));
        }
    }
    for (&q, &a) in target.entries() {
        if q != 1 && !pe.contains(&q) && a != 0 {
            return fail(format!("a_{q} = {a} but {q} is not a period, so a_{q} = 0 is required"));
        }
    }
    Admissibility {
        admissible: true,
        violation: None,
    }
}

/// `Λ′ ≤ Λ`: every block of `Λ′` is matched to its own block of `Λ` with the
/// same eigenvalue and at least the same size.
pub fn order_leq(smaller: &JordanSpec, larger: &JordanSpec) -> bool {
    let group = |s: &JordanSpec| {
        let mut g: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
        for b in s.blocks() {
            g.entry((b.order, b.power)).or_default().push(b.size);
        }
        for v in g.values_mut() {
            v.sort_unstable_by(|a, b| b.cmp(a));
        }
        g
    };
    let small = group(smaller);
    let large = group(larger);
    small.iter().all(|(key, ks)| match large.get(key) {
        Some(kl) => ks.len() <= kl.len() && ks.iter().zip(kl).all(|(a, b)| a <= b),
        None => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(t: &[(u32, u32, u32)]) -> JordanSpec {
        JordanSpec::from_triples(t).unwrap()
    }

    fn brute_pe(orders: &[u64]) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        for mask in 1u32..(1 << orders.len()) {
            let mut l = 1;
            for (i, &d) in orders.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    l = lcm_u64(l, d);
                }
            }
            out.insert(l);
        }
        out
    }

    #[test]
    fn periods_and_order() {
        let s = spec(&[(1, 2, 1), (1, 3, 1)]);
        assert_eq!(s.period_set(), BTreeSet::from([2, 3, 6]));
        assert_eq!(s.global_order(), 6);
        assert_eq!(spec(&[(1, 1, 1)]).period_set(), BTreeSet::from([1]));
        assert_eq!(spec(&[(3, 4, 3)]).global_order(), 4);
        let s = spec(&[(1, 2, 1), (1, 6, 1), (1, 5, 1)]);
        assert_eq!(s.period_set(), BTreeSet::from([2, 5, 6, 10, 30]));
        assert_eq!(s.global_order(), 30);
    }

    #[test]
    fn masks() {
        let s = spec(&[(2, 6, 1), (1, 3, 1)]);
        assert_eq!(s.word_mask(3).bits(), &[false, false, true]);
        assert_eq!(s.word_mask(6).bits(), &[true, true, true]);
        assert!(s.word_mask(2).is_zero());
        assert_eq!(s.theta(0), 0);
        assert_eq!(s.theta(1), 0);
        assert_eq!(s.theta(2), 1);
        assert_eq!((s.lead(1), s.last(0)), (2, 1));
    }

    #[test]
    fn zero_order_is_rejected() {
        assert!(JordanBlock::new(1, 0, 1).is_err());
        assert!(JordanBlock::new(1, 4, 2).is_err());
        assert!(JordanBlock::new(0, 4, 1).is_err());
        assert!(JordanSpec::new(vec![]).is_err());
    }

    #[test]
    fn inline_syntax() {
        let s = JordanSpec::parse_inline(" [ (1,2,1) ; (1, 3,1)] ").unwrap();
        assert_eq!(s, spec(&[(1, 2, 1), (1, 3, 1)]));
        assert_eq!(s.to_string(), "[(1,2,1);(1,3,1)]");
        for bad in ["", "[", "[(1,2)]", "[(1,2,1)", "[(1,0,1)]", "[(1,2,1)]x", "[(1,2,-1)]"] {
            match JordanSpec::parse_inline(bad) {
                Err(Error::Parse { .. }) => {}
                other => panic!("{bad:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn admissibility_clauses() {
        let s = spec(&[(1, 2, 1), (1, 3, 1)]);
        let ok = SequenceTarget::from_pairs(&[(1, 1), (2, 2), (3, 1), (6, 3)]);
        assert!(is_admissible(&s, &ok).admissible);
        let v = is_admissible(&s, &SequenceTarget::from_pairs(&[(1, 2), (2, 1), (3, 1), (6, 1)]));
        assert!(!v.admissible && v.violation.unwrap().starts_with("a_1"));
        let v = is_admissible(&s, &SequenceTarget::from_pairs(&[(1, 1), (2, 0), (3, 1), (6, 1)]));
        assert!(!v.admissible && v.violation.unwrap().starts_with("a_2"));
        let v = is_admissible(&s, &SequenceTarget::from_pairs(&[(2, 1), (3, 1), (6, 1), (4, 1)]));
        assert!(!v.admissible && v.violation.unwrap().starts_with("a_4"));
        let one = spec(&[(1, 1, 1)]);
        assert!(!is_admissible(&one, &SequenceTarget::from_pairs(&[(1, 1)])).admissible);
        assert!(is_admissible(&one, &SequenceTarget::from_pairs(&[(1, 2)])).admissible);
    }

    #[test]
    fn sequence_parse() {
        let t = SequenceTarget::parse("1:1, 2:2,6:3").unwrap();
        assert_eq!(t, SequenceTarget::from_pairs(&[(1, 1), (2, 2), (6, 3)]));
        assert_eq!(t.to_string(), "1:1,2:2,6:3");
        assert!(SequenceTarget::parse("1:1,1:2").is_err());
        assert!(SequenceTarget::parse("0:1").is_err());
        assert!(SequenceTarget::parse("x").is_err());
    }

    #[test]
    fn partial_order() {
        assert!(order_leq(&spec(&[(1, 3, 1)]), &spec(&[(2, 3, 1)])));
        assert!(!order_leq(&spec(&[(1, 2, 1)]), &spec(&[(2, 3, 1)])));
        let l = spec(&[(2, 3, 1), (1, 2, 1)]);
        assert!(order_leq(&l, &l));
        assert!(order_leq(&spec(&[(1, 2, 1), (1, 3, 1)]), &l));
        assert!(!order_leq(&spec(&[(3, 3, 1)]), &l));
        assert!(!order_leq(&spec(&[(1, 3, 1), (1, 3, 1)]), &l));
    }

    #[test]
    fn matrix_has_superdiagonal() {
        let s = spec(&[(2, 6, 1), (1, 3, 1)]);
        let a = s.matrix();
        assert!(a[0][1].is_one());
        assert!(a[1][2].is_zero());
        assert_eq!(a[2][2], root_of_unity(3, 1, 6).unwrap());
        assert_eq!(s.residue(0), 1);
        assert_eq!(s.residue(2), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn coprime_power(d: u32, seed: u32) -> u32 {
            (1..=d).cycle().skip(seed as usize % d as usize).find(|&r| gcd_u64(r as u64, d as u64) == 1).unwrap()
        }

        fn arb_spec() -> impl Strategy<Value = JordanSpec> {
            proptest::collection::vec((1u32..3, 1u32..13, 0u32..12), 1..5).prop_map(|v| {
                JordanSpec::new(
                    v.into_iter()
                        .map(|(k, d, s)| JordanBlock::new(k, d, coprime_power(d, s)).unwrap())
                        .collect(),
                )
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn pe_is_lcm_closed(s in arb_spec()) {
                let pe = s.period_set();
                for &a in &pe {
                    for &b in &pe {
                        prop_assert!(pe.contains(&lcm_u64(a, b)));
                    }
                }
                prop_assert_eq!(*pe.iter().max().unwrap(), s.global_order());
                let orders: Vec<u64> = s.blocks().iter().map(|b| b.order as u64).collect();
                prop_assert_eq!(&pe, &brute_pe(&orders));
            }

            #[test]
            fn masks_monotone_and_detect_periods(s in arb_spec(), l in 1u64..40, k in 1u64..4) {
                prop_assert!(s.word_mask(l).is_subset_of(&s.word_mask(l * k)));
                prop_assert_eq!(s.word_mask(s.global_order()), WordMask::all_ones(s.dim()));
                let w = s.word_mask(l);
                let full_lcm = s.blocks().iter().filter(|b| l % b.order as u64 == 0)
                    .fold(1, |acc, b| lcm_u64(acc, b.order as u64));
                let in_pe = !w.is_zero() && full_lcm == l;
                prop_assert_eq!(s.period_set().contains(&l), in_pe);
            }

            #[test]
            fn order_is_reflexive_and_transitive(a in arb_spec(), b in arb_spec(), c in arb_spec()) {
                prop_assert!(order_leq(&a, &a));
                if order_leq(&a, &b) && order_leq(&b, &c) {
                    prop_assert!(order_leq(&a, &c));
                }
                if order_leq(&a, &b) && order_leq(&b, &a) {
                    let mut x = a.blocks().to_vec();
                    let mut y = b.blocks().to_vec();
                    x.sort();
                    y.sort();
                    prop_assert_eq!(x, y);
                }
            }

            #[test]
            fn order_invariant_under_reordering(a in arb_spec()) {
                let rev: Vec<usize> = (0..a.num_blocks()).rev().collect();
                let r = a.permuted(&rev).unwrap();
                prop_assert!(order_leq(&a, &r) && order_leq(&r, &a));
                let first = JordanSpec::new(vec![a.blocks()[0]]).unwrap();
                prop_assert!(order_leq(&first, &r));
            }
        }
    }
}
