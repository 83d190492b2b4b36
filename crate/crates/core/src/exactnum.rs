//! Exact arithmetic in `Q` and in the cyclotomic fields `Q(ζ_M)`.
//!
//! An element of `Q(ζ_M)` is stored as its residue modulo the cyclotomic
//! polynomial `Φ_M`, i.e. as a coefficient vector of length `φ(M)` in the
//! power basis `1, z, …, z^{φ(M)-1}`. The representation is canonical, so
//! equality and zero testing are coefficient-wise.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use crate::error::{Error, Result};

pub use num_rational::BigRational;

/// Minimal field interface used by the exact linear algebra kernels.
pub trait Field: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn is_zero_el(&self) -> bool;
    fn is_one_el(&self) -> bool;
    fn neg(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Multiplicative inverse; callers guarantee `self` is nonzero.
    fn inv(&self) -> Self;
}

impl Field for BigRational {
    fn is_zero_el(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_one_el(&self) -> bool {
        One::is_one(self)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn inv(&self) -> Self {
        self.recip()
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Euler's totient.
pub fn totient(m: u64) -> u64 {
    let mut n = m;
    let mut out = m;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

static CYCLOTOMIC_CACHE: Lazy<Mutex<HashMap<u32, Arc<Vec<BigInt>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Coefficients of `Φ_m`, lowest degree first.
///
/// Computed by exact division of `z^m - 1` by the product of `Φ_d` over the
/// proper divisors `d` of `m`, and memoized for the life of the process.
pub fn cyclotomic_polynomial(m: u32) -> Arc<Vec<BigInt>> {
    assert!(m >= 1, "cyclotomic polynomial of order 0");
    if let Some(p) = CYCLOTOMIC_CACHE.lock().unwrap().get(&m) {
        return p.clone();
    }
    // z^m - 1
    let mut num = vec![BigInt::zero(); m as usize + 1];
    num[0] = BigInt::from(-1);
    num[m as usize] = BigInt::one();
    for d in 1..m {
        if m % d == 0 {
            let phi_d = cyclotomic_polynomial(d);
            num = exact_div_monic(&num, &phi_d);
        }
    }
    let out = Arc::new(num);
    CYCLOTOMIC_CACHE.lock().unwrap().insert(m, out.clone());
    out
}

/// Exact division of integer polynomials by a monic divisor. Panics if the
/// remainder is nonzero.
fn exact_div_monic(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dn = den.len() - 1;
    debug_assert!(den[dn].is_one());
    let mut rem = num.to_vec();
    if num.len() <= dn {
        assert!(rem.iter().all(Zero::is_zero), "inexact cyclotomic division");
        return vec![BigInt::zero()];
    }
    let qlen = num.len() - dn;
    let mut quot = vec![BigInt::zero(); qlen];
    for i in (0..qlen).rev() {
        let c = rem[i + dn].clone();
        if c.is_zero() {
            continue;
        }
        for (j, dj) in den.iter().enumerate() {
            rem[i + j] -= &c * dj;
        }
        quot[i] = c;
    }
    assert!(rem.iter().all(Zero::is_zero), "inexact cyclotomic division");
    quot
}

/// An exact element of `Q(ζ_M)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CyclotomicNumber {
    modulus: u32,
    coeffs: Vec<BigRational>,
}

impl CyclotomicNumber {
    pub fn zero(modulus: u32) -> Self {
        let phi = totient(modulus as u64) as usize;
        CyclotomicNumber {
            modulus,
            coeffs: vec![BigRational::zero(); phi],
        }
    }

    pub fn one(modulus: u32) -> Self {
        Self::from_rational(modulus, BigRational::one())
    }

    pub fn from_rational(modulus: u32, value: BigRational) -> Self {
        let mut out = Self::zero(modulus);
        out.coeffs[0] = value;
        out
    }

    pub fn from_int(modulus: u32, value: i64) -> Self {
        Self::from_rational(modulus, rat_int(value))
    }

    /// Build from an arbitrary-length coefficient vector in powers of `ζ_M`,
    /// reducing modulo `Φ_M`.
    pub fn from_power_coeffs(modulus: u32, coeffs: Vec<BigRational>) -> Self {
        CyclotomicNumber {
            modulus,
            coeffs: reduce_mod_cyclotomic(modulus, coeffs),
        }
    }

    /// `ζ_M^exponent` for any integer exponent.
    pub fn zeta_power(modulus: u32, exponent: i64) -> Self {
        let e = exponent.rem_euclid(modulus as i64) as usize;
        let mut v = vec![BigRational::zero(); e + 1];
        v[e] = BigRational::one();
        Self::from_power_coeffs(modulus, v)
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Basis coefficients `a_0, …, a_{φ(M)-1}`.
    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(Zero::is_zero)
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(Zero::is_zero)
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.is_rational() {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn check_modulus(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::Domain(format!(
                "cyclotomic modulus mismatch: Q(zeta_{}) vs Q(zeta_{})",
                self.modulus, other.modulus
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_modulus(other)?;
        Ok(CyclotomicNumber {
            modulus: self.modulus,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_modulus(other)?;
        Ok(CyclotomicNumber {
            modulus: self.modulus,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_modulus(other)?;
        if self.is_rational() {
            let c = &self.coeffs[0];
            return Ok(other.scale(c));
        }
        if other.is_rational() {
            return Ok(self.scale(&other.coeffs[0]));
        }
        let n = self.coeffs.len();
        let mut prod = vec![BigRational::zero(); 2 * n - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        Ok(Self::from_power_coeffs(self.modulus, prod))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        CyclotomicNumber {
            modulus: self.modulus,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against `Φ_M`.
    pub fn invert(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if let Some(r) = self.as_rational() {
            return Ok(Self::from_rational(self.modulus, r.recip()));
        }
        let phi: Vec<BigRational> = cyclotomic_polynomial(self.modulus)
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect();
        // Invariant: s * a ≡ r (mod Φ).
        let mut r0 = phi;
        let mut r1 = trim(self.coeffs.clone());
        let mut s0: Vec<BigRational> = vec![];
        let mut s1: Vec<BigRational> = vec![BigRational::one()];
        while !(r1.len() == 1) {
            let (q, r) = poly_divrem(&r0, &r1);
            let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
            if r1.is_empty() {
                unreachable!("Φ_M is irreducible, gcd with a nonzero element is 1");
            }
        }
        let c = r1[0].recip();
        let inv: Vec<BigRational> = s1.iter().map(|x| x * &c).collect();
        Ok(Self::from_power_coeffs(self.modulus, inv))
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.modulus);
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Re-embed into `Q(ζ_N)` for a multiple `N` of the current modulus.
    pub fn embed(&self, new_modulus: u32) -> Result<Self> {
        if new_modulus % self.modulus != 0 {
            return Err(Error::Domain(format!(
                "cannot embed Q(zeta_{}) into Q(zeta_{})",
                self.modulus, new_modulus
            )));
        }
        let step = (new_modulus / self.modulus) as usize;
        let mut v = vec![BigRational::zero(); (self.coeffs.len() - 1) * step + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i * step] = c.clone();
        }
        Ok(Self::from_power_coeffs(new_modulus, v))
    }

    /// Approximate complex value; for display only.
    pub fn approx(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            let cf = c.to_f64().unwrap_or(f64::NAN);
            let ang = 2.0 * std::f64::consts::PI * k as f64 / self.modulus as f64;
            re += cf * ang.cos();
            im += cf * ang.sin();
        }
        (re, im)
    }
}

/// `e^{2πi·power/order}` inside `Q(ζ_M)`.
pub fn root_of_unity(order: u32, power: i64, modulus: u32) -> Result<CyclotomicNumber> {
    if order == 0 || modulus == 0 || modulus % order != 0 {
        return Err(Error::Domain(format!(
            "root of unity of order {order} does not live in Q(zeta_{modulus})"
        )));
    }
    let step = (modulus / order) as i64;
    Ok(CyclotomicNumber::zeta_power(modulus, power * step))
}

fn reduce_mod_cyclotomic(modulus: u32, mut v: Vec<BigRational>) -> Vec<BigRational> {
    let phi_poly = cyclotomic_polynomial(modulus);
    let deg = phi_poly.len() - 1;
    if v.len() > deg {
        for i in (deg..v.len()).rev() {
            let c = std::mem::take(&mut v[i]);
            if c.is_zero() {
                continue;
            }
            for (j, pj) in phi_poly.iter().take(deg).enumerate() {
                if !pj.is_zero() {
                    v[i - deg + j] -= &c * BigRational::from_integer(pj.clone());
                }
            }
        }
        v.truncate(deg);
    }
    v.resize(deg, BigRational::zero());
    v
}

fn trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
    v
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let mut out = vec![BigRational::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(out)
}

fn poly_divrem(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut rem = trim(a.to_vec());
    let b = trim(b.to_vec());
    let db = b.len() - 1;
    let lead_inv = b[db].recip();
    if rem.len() < b.len() {
        return (vec![], rem);
    }
    let mut quot = vec![BigRational::zero(); rem.len() - db];
    while rem.len() >= b.len() {
        let shift = rem.len() - b.len();
        let c = rem.last().unwrap() * &lead_inv;
        for (j, bj) in b.iter().enumerate() {
            rem[shift + j] -= &c * bj;
        }
        quot[shift] = c;
        rem = trim(rem);
    }
    (trim(quot), rem)
}

impl Field for CyclotomicNumber {
    fn is_zero_el(&self) -> bool {
        CyclotomicNumber::is_zero(self)
    }
    fn is_one_el(&self) -> bool {
        CyclotomicNumber::is_one(self)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn inv(&self) -> Self {
        self.invert().expect("inverse of zero")
    }
}

// Operator impls panic on a modulus mismatch; every caller inside the crate
// works in the single session field `Q(ζ_M(Λ))`.
impl Add for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn add(self, rhs: Self) -> CyclotomicNumber {
        self.checked_add(rhs).expect("cyclotomic modulus mismatch")
    }
}

impl Sub for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn sub(self, rhs: Self) -> CyclotomicNumber {
        self.checked_sub(rhs).expect("cyclotomic modulus mismatch")
    }
}

impl Mul for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn mul(self, rhs: Self) -> CyclotomicNumber {
        self.checked_mul(rhs).expect("cyclotomic modulus mismatch")
    }
}

impl Neg for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> CyclotomicNumber {
        CyclotomicNumber {
            modulus: self.modulus,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl fmt::Debug for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} [in Q(zeta_{})]", self.modulus)
    }
}

impl fmt::Display for CyclotomicNumber {
    /// Basis combination `a0 + a1*w(M,1) + a2*w(M,1)^2 + …`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (neg, abs) = (c.is_negative(), c.abs());
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            match k {
                0 => write!(f, "{abs}")?,
                _ => {
                    if !abs.is_one() {
                        write!(f, "{abs}*")?;
                    }
                    write!(f, "w({},1)", self.modulus)?;
                    if k > 1 {
                        write!(f, "^{k}")?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Greatest common divisor and least common multiple helpers on machine ints.
pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}
