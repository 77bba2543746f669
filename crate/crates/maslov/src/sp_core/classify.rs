use num_integer::Integer;
use num_traits::ToPrimitive;

use super::matrix::SymplecticMatrix;
use super::normal_form::{decompose_normal_form, BasicNormalForm, NormalFormDecomposition};
use crate::error::Result;
use crate::exact::Real;
use crate::tol;

/// Outcome of a root-of-unity test on an angle given in turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rationality {
    /// `turns = p/q` in lowest terms, `0 <= p < q`.
    Rational { p: i64, q: u64 },
    /// Exactly irrational (quadratic surd).
    Irrational,
    /// No convergent with denominator up to `bound` matches; treated as irrational.
    BeyondBound { bound: u64 },
}

impl Rationality {
    pub fn order(&self) -> Option<u64> {
        match self {
            Rationality::Rational { q, .. } => Some(*q),
            _ => None,
        }
    }

    pub fn is_irrational(&self) -> bool {
        !matches!(self, Rationality::Rational { .. })
    }
}

/// Root-of-unity test for `e^{2 pi i turns}` via continued fractions.
pub fn angle_rationality(turns: &Real, q_max: u64) -> Rationality {
    let f = turns.fract();
    if let Some(is_irr) = f.is_irrational() {
        if is_irr {
            return Rationality::Irrational;
        }
        let r = f.as_rational().expect("exact rational");
        let q = r.denom().to_u64().unwrap_or(u64::MAX);
        let p = r.numer().to_i64().unwrap_or(0);
        return Rationality::Rational { p, q };
    }
    let x = f.to_f64();
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut rem = x;
    for _ in 0..64 {
        let a = rem.floor();
        let ai = a as i64;
        let h2 = ai.saturating_mul(h1).saturating_add(h0);
        let k2 = ai.saturating_mul(k1).saturating_add(k0);
        if k2 as u64 > q_max || k2 <= 0 {
            break;
        }
        if (x - h2 as f64 / k2 as f64).abs() < tol::ROOT_MATCH {
            let g = h2.gcd(&k2);
            let (p, q) = (h2 / g, (k2 / g) as u64);
            return Rationality::Rational { p: p.rem_euclid(q as i64), q };
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rem - a;
        if frac.abs() < 1e-300 {
            break;
        }
        rem = 1.0 / frac;
    }
    if x.min(1.0 - x) < tol::ROOT_MATCH {
        return Rationality::Rational { p: 0, q: 1 };
    }
    Rationality::BeyondBound { bound: q_max }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationClass {
    /// No eigenvalue other than 1 is a k-th root of unity.
    pub admissible: bool,
    /// False exactly when an odd number of eigenvalues lie in (-1, 0) and k is even.
    pub good_if_iterate: bool,
    pub neg_interval_count: usize,
    /// "irrational within bound" notes for float angles that matched no convergent.
    pub caveats: Vec<String>,
}

/// Classification from a decomposition, using exact angles when the blocks carry them.
pub fn classify_decomposition(d: &NormalFormDecomposition, k: u64, q_max: u64) -> IterationClass {
    let mut admissible = true;
    let mut caveats = Vec::new();
    for b in &d.blocks {
        if matches!(b, BasicNormalForm::N1 { lambda: 1, .. }) {
            continue;
        }
        let Some(t) = b.unit_turns() else { continue };
        match angle_rationality(&t, q_max) {
            Rationality::Rational { q, .. } => {
                if k % q == 0 {
                    admissible = false;
                }
            }
            Rationality::Irrational => {}
            Rationality::BeyondBound { bound } => {
                caveats.push(format!("{}: irrational within bound {bound}", b.label()));
            }
        }
    }
    let neg_interval_count = d
        .rest_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() < tol::CLUSTER && z.re < 0.0 && z.re > -1.0)
        .count();
    let good_if_iterate = !(neg_interval_count % 2 == 1 && k % 2 == 0);
    IterationClass { admissible, good_if_iterate, neg_interval_count, caveats }
}

pub fn classify_iteration_with(m: &SymplecticMatrix, k: u64, q_max: u64) -> Result<IterationClass> {
    let d = decompose_normal_form(m)?;
    Ok(classify_decomposition(&d, k, q_max))
}

/// Eigenvalue-level classification of the k-th iterate.
pub fn classify_iteration(m: &SymplecticMatrix, k: u64) -> Result<IterationClass> {
    classify_iteration_with(m, k, tol::q_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Surd;
    use crate::linalg::rot2;

    #[test]
    fn detects_rational_angles() {
        assert_eq!(angle_rationality(&Real::Float(1.0 / 3.0), tol::Q_MAX), Rationality::Rational { p: 1, q: 3 });
        assert_eq!(angle_rationality(&Real::Float(0.7), tol::Q_MAX), Rationality::Rational { p: 7, q: 10 });
        assert_eq!(angle_rationality(&Real::ratio(5, 4), tol::Q_MAX), Rationality::Rational { p: 1, q: 4 });
        let s = Real::Float(0.5f64.sqrt());
        assert_eq!(angle_rationality(&s, tol::Q_MAX), Rationality::BeyondBound { bound: tol::Q_MAX });
        let e = Real::Exact(Surd::sqrt(2));
        assert_eq!(angle_rationality(&e, tol::Q_MAX), Rationality::Irrational);
    }

    #[test]
    fn cube_root_of_unity() {
        let m = SymplecticMatrix::trusted(rot2(std::f64::consts::TAU / 3.0));
        assert!(!classify_iteration(&m, 3).unwrap().admissible);
        assert!(classify_iteration(&m, 4).unwrap().admissible);
        assert!(classify_iteration(&m, 1).unwrap().admissible);
    }
}
