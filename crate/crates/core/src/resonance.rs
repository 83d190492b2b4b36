//! Resonant normal forms, the map `τ`, masked projections and the division
//! construction `τ̃`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactnum::{lcm_u64, CyclotomicNumber};
use crate::jordan::{JordanSpec, WordMask};
use crate::multipoly::{GermMap, Monomial, Polynomial};

/// Eigenvalues of `Λ` as exponents of `ζ_M`, one per coordinate.
#[derive(Clone, Debug)]
pub struct ResonanceContext {
    spec: JordanSpec,
    modulus: u64,
    residues: Vec<u64>,
}

impl ResonanceContext {
    pub fn new(spec: &JordanSpec) -> Self {
        let residues = (0..spec.dim()).map(|j| spec.residue(j)).collect();
        ResonanceContext {
            spec: spec.clone(),
            modulus: spec.global_order(),
            residues,
        }
    }

    pub fn spec(&self) -> &JordanSpec {
        &self.spec
    }

    pub fn residue(&self, j: usize) -> u64 {
        self.residues[j]
    }

    /// `λ_s = λ_1^{i_1} ⋯ λ_n^{i_n}`, tested on exponents of `ζ_M`.
    pub fn is_resonant_monomial(&self, mono: &Monomial, target: usize) -> Result<bool> {
        if mono.degree() < 2 {
            return Err(Error::domain("resonance is only defined for degree at least 2"));
        }
        Ok(self.weight(mono) == self.residues[target])
    }

    /// Exponent of `ζ_M` in `∏ λ_j^{i_j}`.
    pub fn weight(&self, mono: &Monomial) -> u64 {
        mono.exponents()
            .iter()
            .zip(&self.residues)
            .fold(0, |acc, (&e, &r)| (acc + (e as u64 % self.modulus) * r) % self.modulus)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RnfViolation {
    DimensionMismatch { matrix: usize, map: usize },
    LinearPart { row: usize, column: usize, expected: String, found: String },
    NonResonant { coordinate: usize, monomial: String },
}

impl fmt::Display for RnfViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RnfViolation::DimensionMismatch { matrix, map } => {
                write!(f, "matrix has dimension {matrix} but the map has {map} coordinates")
            }
            RnfViolation::LinearPart { row, column, expected, found } => write!(
                f,
                "linear part mismatch at ({row},{column}): expected {expected}, found {found}"
            ),
            RnfViolation::NonResonant { coordinate, monomial } => {
                write!(f, "term {monomial} in coordinate f{coordinate} is not resonant")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RnfVerdict {
    pub ok: bool,
    pub violations: Vec<RnfViolation>,
}

/// Checks that `f` has linear part exactly `Λ` and only resonant nonlinear terms.
pub fn validate_rnf(spec: &JordanSpec, f: &GermMap) -> RnfVerdict {
    let mut violations = Vec::new();
    let expected = match spec.matrix_in(f.modulus()) {
        Ok(a) if spec.dim() == f.nvars() => a,
        _ => {
            violations.push(RnfViolation::DimensionMismatch {
                matrix: spec.dim(),
                map: f.nvars(),
            });
            return RnfVerdict { ok: false, violations };
        }
    };
    let found = f.linear_part();
    for (i, (er, fr)) in expected.iter().zip(&found).enumerate() {
        for (j, (e, g)) in er.iter().zip(fr).enumerate() {
            if e != g {
                violations.push(RnfViolation::LinearPart {
                    row: i + 1,
                    column: j + 1,
                    expected: e.to_string(),
                    found: g.to_string(),
                });
            }
        }
    }
    let ctx = ResonanceContext::new(spec);
    for (i, p) in f.coords().iter().enumerate() {
        for (m, _) in p.terms() {
            if m.degree() >= 2 && !ctx.is_resonant_monomial(m, i).unwrap() {
                violations.push(RnfViolation::NonResonant {
                    coordinate: i + 1,
                    monomial: m.to_string(),
                });
            }
        }
    }
    RnfVerdict {
        ok: violations.is_empty(),
        violations,
    }
}

/// The diagonal part `Λ̃` as a linear germ.
pub fn diagonal_germ(spec: &JordanSpec) -> GermMap {
    diagonal_germ_in(spec, spec.modulus()).expect("M(Λ) contains the eigenvalues")
}

/// `Λ̃` over `Q(ζ_m)` for a multiple `m` of `M(Λ)`.
pub fn diagonal_germ_in(spec: &JordanSpec, modulus: u32) -> Result<GermMap> {
    let mut a = spec.matrix_in(modulus)?;
    let n = a.len();
    for (i, row) in a.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            if i != j {
                *c = CyclotomicNumber::zero(modulus);
            }
        }
    }
    debug_assert_eq!(n, spec.dim());
    Ok(GermMap::linear(&a, modulus))
}

/// `τf = (Λ − Λ̃)x + F(x)`.
pub fn tau(spec: &JordanSpec, f: &GermMap) -> Result<GermMap> {
    if spec.dim() != f.nvars() {
        return Err(Error::domain("matrix and map dimensions differ"));
    }
    if f.linear_part() != spec.matrix_in(f.modulus())? {
        return Err(Error::domain("linear part of the map is not the given Jordan matrix"));
    }
    f.sub(&diagonal_germ_in(spec, f.modulus())?)
}

/// `p_w ∘ g ∘ i_w`.
pub fn project(g: &GermMap, w: &WordMask) -> GermMap {
    let keep = w.support();
    if keep.is_empty() {
        return GermMap::empty(g.modulus());
    }
    let coords = keep.iter().map(|&j| g.coord(j).restrict(&keep)).collect();
    GermMap::new(coords, g.modulus()).expect("restriction keeps the origin fixed")
}

/// The Jordan matrix `p_w ∘ Λ ∘ i_w` for a mask that selects whole blocks.
pub fn project_spec(spec: &JordanSpec, w: &WordMask) -> Result<Option<JordanSpec>> {
    let mut blocks = Vec::new();
    for (t, b) in spec.blocks().iter().enumerate() {
        let sel: Vec<bool> = (spec.lead(t)..=spec.last(t)).map(|j| w.bits()[j]).collect();
        if sel.iter().all(|&x| x) {
            blocks.push(*b);
        } else if sel.iter().any(|&x| x) {
            return Err(Error::domain("mask splits a Jordan block"));
        }
    }
    if blocks.is_empty() {
        Ok(None)
    } else {
        JordanSpec::new(blocks).map(Some)
    }
}

/// Smallest (then lexicographically first) block selection with lcm `M(Λ)`
/// whose members each fail to divide the lcm of all other blocks.
pub fn condition_f31(spec: &JordanSpec) -> Option<Vec<usize>> {
    let orders: Vec<u64> = spec.blocks().iter().map(|b| b.order as u64).collect();
    let m = orders.len();
    let big_m = spec.global_order();
    let eligible: Vec<bool> = (0..m)
        .map(|j| {
            let rest = (0..m)
                .filter(|&i| i != j)
                .fold(1, |acc, i| lcm_u64(acc, orders[i]));
            rest % orders[j] != 0
        })
        .collect();
    for t in 1..=m {
        let mut combo: Vec<usize> = (0..t).collect();
        loop {
            let l = combo.iter().fold(1, |acc, &j| lcm_u64(acc, orders[j]));
            if l == big_m && combo.iter().all(|&j| eligible[j]) {
                return Some(combo);
            }
            // next combination in lexicographic order
            let mut i = t;
            while i > 0 && combo[i - 1] == m - t + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for k in i..t {
                combo[k] = combo[k - 1] + 1;
            }
        }
    }
    None
}

/// Whether every monomial of every last-of-block coordinate of `g` uses only
/// the lead variables of the blocks.
pub fn has_lead_variable_shape(spec: &JordanSpec, g: &GermMap) -> bool {
    let leads: Vec<usize> = (0..spec.num_blocks()).map(|t| spec.lead(t)).collect();
    (0..spec.num_blocks()).all(|t| g.coord(spec.last(t)).uses_only(&leads))
}

/// `τ̃f`: divides coordinate `s_j` of `τf` by `x_{s_{j-1}+1}` for each block `j`
/// of the witness.
pub fn tilde_tau(spec: &JordanSpec, f: &GermMap, witness: &[usize]) -> Result<GermMap> {
    let tf = tau(spec, f)?;
    if !has_lead_variable_shape(spec, &tf) {
        return Err(Error::domain(
            "last coordinates of the blocks use non-lead variables; normalize the map first",
        ));
    }
    let n = spec.dim();
    let mut coords = tf.coords().to_vec();
    for &t in witness {
        if t >= spec.num_blocks() {
            return Err(Error::domain(format!("witness block {} out of range", t + 1)));
        }
        let s = spec.last(t);
        let lead = Monomial::var(n, spec.lead(t));
        let div = coords[s].div_monomial(&lead).filter(|_| !coords[s].is_zero());
        coords[s] = div.ok_or_else(|| {
            Error::domain(format!(
                "coordinate f{} is not divisible by x{}",
                s + 1,
                spec.lead(t) + 1
            ))
        })?;
    }
    // the quotient may acquire a constant term only if the map was not a germ
    if coords.iter().any(|p: &Polynomial| p.constant_term().is_some()) {
        return Err(Error::domain("division produced a nonzero constant term"));
    }
    GermMap::new(coords, f.modulus())
}
