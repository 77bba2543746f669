//! Splitting numbers `S^{+-}_M(omega)` read off the basic-normal-form table,
//! their aggregate `C(M)`, and a nudge-based oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::exact::{same_turns, Real};
use crate::linalg::{eigenvalues, j_matrix, smallest_right_vectors, to_complex, CMat, Mat};
use crate::path::SymplecticPath;
use crate::sp_core::{BasicNormalForm, NormalFormDecomposition, SymplecticMatrix};

/// Splitting data at one unit eigenvalue `e^{2 pi i turns}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitEntry {
    pub turns: Real,
    pub s_plus: u32,
    pub s_minus: u32,
    pub nullity: usize,
}

impl SplitEntry {
    pub fn angle(&self) -> f64 {
        TAU * self.turns.to_f64()
    }
}

/// All unit eigenvalues of a decomposition with their splitting numbers,
/// sorted by angle in `[0, 2pi)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SplittingTable {
    pub entries: Vec<SplitEntry>,
}

impl SplittingTable {
    /// `(S^+, S^-)` at `omega = 1`.
    pub fn at_one(&self) -> (u32, u32) {
        self.at(&Real::zero())
    }

    pub fn at(&self, turns: &Real) -> (u32, u32) {
        self.entries.iter().find(|e| same_turns(&e.turns, turns)).map(|e| (e.s_plus, e.s_minus)).unwrap_or((0, 0))
    }

    /// Entries with angle in `(0, 2pi)`.
    pub fn circle(&self) -> impl Iterator<Item = &SplitEntry> {
        self.entries.iter().filter(|e| e.turns.fract().signum() != 0)
    }

    /// `C(M)`: the sum of `S^-` over angles in `(0, 2pi)`.
    pub fn c(&self) -> u32 {
        self.circle().map(|e| e.s_minus).sum()
    }

    /// `sum over (0, 2pi) of (theta / pi) S^-`, exact when every angle is.
    pub fn weighted_minus(&self) -> Real {
        self.circle().fold(Real::zero(), |acc, e| acc.add(&e.turns.fract().scale(2 * e.s_minus as i64)))
    }
}

fn block_splitting(b: &BasicNormalForm, x: &Real) -> (u32, u32) {
    let same = |t: &Real| same_turns(t, x);
    match b {
        BasicNormalForm::D { .. } => (0, 0),
        BasicNormalForm::N1 { lambda: 1, a } if same(&Real::zero()) => {
            if *a >= 0 {
                (1, 1)
            } else {
                (0, 0)
            }
        }
        BasicNormalForm::N1 { lambda: -1, a } if same(&Real::ratio(1, 2)) => {
            if *a <= 0 {
                (1, 1)
            } else {
                (0, 0)
            }
        }
        BasicNormalForm::N1 { .. } => (0, 0),
        BasicNormalForm::R { turns } => {
            if same(turns) {
                (0, 1)
            } else if same(&turns.neg()) {
                (1, 0)
            } else {
                (0, 0)
            }
        }
        BasicNormalForm::N2 { turns, trivial, .. } => {
            if same(turns) || same(&turns.neg()) {
                if *trivial {
                    (0, 0)
                } else {
                    (1, 1)
                }
            } else {
                (0, 0)
            }
        }
    }
}

/// `(S^+, S^-)` at `e^{2 pi i turns}`, summed over blocks.
pub fn splitting_numbers_turns(d: &NormalFormDecomposition, turns: &Real) -> (u32, u32) {
    d.blocks.iter().map(|b| block_splitting(b, turns)).fold((0, 0), |(p, q), (a, b)| (p + a, q + b))
}

/// `(S^+, S^-)` at a unit complex number. Angles that nearly coincide with a
/// block angle without matching it are rejected.
pub fn splitting_numbers(d: &NormalFormDecomposition, omega: Complex64) -> Result<(u32, u32)> {
    if (omega.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::Parameter(format!("omega = {omega} is not on the unit circle")));
    }
    let x = omega.arg().rem_euclid(TAU) / TAU;
    let probe = Real::Float(x);
    for t in table_turns(d) {
        let gap = (t.to_f64() - x).rem_euclid(1.0);
        let gap = gap.min(1.0 - gap) * TAU;
        if !same_turns(&t, &probe) && gap < crate::tol::AMBIGUITY {
            return Err(Error::AmbiguousSpectrum {
                a: format!("{omega}"),
                b: format!("e^(2pi i {t})"),
                distance: gap,
            });
        }
    }
    Ok(splitting_numbers_turns(d, &probe))
}

fn table_turns(d: &NormalFormDecomposition) -> Vec<Real> {
    let mut out: Vec<Real> = Vec::new();
    for b in &d.blocks {
        let Some(t) = b.unit_turns() else { continue };
        for c in [t.fract(), t.neg().fract()] {
            if !out.iter().any(|o| same_turns(o, &c)) {
                out.push(c);
            }
        }
    }
    out.sort_by(|a, b| a.to_f64().total_cmp(&b.to_f64()));
    out
}

pub fn splitting_table(d: &NormalFormDecomposition) -> SplittingTable {
    let entries = table_turns(d)
        .into_iter()
        .map(|t| {
            let (s_plus, s_minus) = splitting_numbers_turns(d, &t);
            SplitEntry { nullity: d.nullity_at_turns(&t), turns: t, s_plus, s_minus }
        })
        .collect();
    SplittingTable { entries }
}

const ORACLE_NUDGES: usize = 48;
const ORACLE_SEED: u64 = 0x5eed_5011;

/// Krein sign of a simple unit eigenvalue of `m`.
fn krein_sign(m: &CMat, g: &CMat, lambda: Complex64) -> i32 {
    let n = m.nrows();
    let a = m - CMat::identity(n, n) * lambda;
    let v = smallest_right_vectors(&a, 1);
    let h = (v.adjoint() * g * &v)[(0, 0)].re;
    if h > 0.0 {
        1
    } else {
        -1
    }
}

/// `(J, J')`: signed Krein counts in the arcs just after and just before `omega`.
fn arc_counts(m: &Mat, omega: Complex64, eps: f64) -> (i32, i32) {
    let n = m.nrows();
    let cm = to_complex(m);
    let g = to_complex(&j_matrix(n)).map(|z| z * Complex64::new(0.0, -1.0));
    let (mut ccw, mut cw) = (0, 0);
    for lambda in eigenvalues(m) {
        let dist = (lambda - omega).norm();
        if dist >= eps || dist < 1e-300 {
            continue;
        }
        if (lambda.norm() - 1.0).abs() >= 1e-3 * dist + 1e-13 {
            continue;
        }
        let rel = (lambda / omega).arg();
        let s = krein_sign(&cm, &g, lambda);
        if rel > 0.0 {
            ccw -= s;
        } else {
            cw += s;
        }
    }
    (ccw, cw)
}

fn oracle_pass(m: &SymplecticMatrix, omega: Complex64, eps: f64) -> Result<(u32, u32)> {
    let n = m.dim();
    let delta = (eps / 10.0).powi(2);
    let j = j_matrix(n);
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut best: Option<i32> = None;
    let mut diff: Option<i32> = None;
    for _ in 0..ORACLE_NUDGES {
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let s = (&raw + raw.transpose()) * 0.5;
        let s = &s / s.norm();
        for sign in [1.0, -1.0] {
            let x: Mat = &j * &s * (sign * delta);
            let nudged = m.matrix() * x.exp();
            let (a, b) = arc_counts(&nudged, omega, eps);
            best = Some(best.map_or(a, |v| v.max(a)));
            match diff {
                None => diff = Some(b - a),
                Some(d) if d != b - a => {
                    return Err(Error::Consistency(format!(
                        "splitting oracle saw an unstable Krein balance at {omega} (eps {eps:e})"
                    )))
                }
                _ => {}
            }
        }
    }
    let sp = best.unwrap_or(0);
    let sm = sp + diff.unwrap_or(0);
    if sp < 0 || sm < 0 {
        return Err(Error::Consistency(format!("splitting oracle produced negative counts ({sp}, {sm})")));
    }
    Ok((sp as u32, sm as u32))
}

/// Independent estimate of `(S^+, S^-)` at `e^{i theta0}` from generic
/// Hamiltonian nudges of the endpoint; passes at two nudge scales must agree.
pub fn splitting_oracle(p: &SymplecticPath, theta0: f64) -> Result<(u32, u32)> {
    if !(theta0 > 0.0 && theta0 < TAU) {
        return Err(Error::Parameter(format!("probe angle {theta0} must lie in (0, 2pi)")));
    }
    let m = p.endpoint();
    let omega = Complex64::from_polar(1.0, theta0);
    let a = oracle_pass(&m, omega, 1e-4)?;
    let b = oracle_pass(&m, omega, 1e-5)?;
    if a != b {
        return Err(Error::Consistency(format!("splitting oracle passes disagree: {a:?} vs {b:?}")));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sp_core::{make_normal_form, SymplecticMatrix};

    fn single(b: BasicNormalForm) -> NormalFormDecomposition {
        NormalFormDecomposition { blocks: vec![b], rest: SymplecticMatrix::identity(0) }
    }

    #[test]
    fn table_rows() {
        let d = single(BasicNormalForm::N1 { lambda: 1, a: 1 });
        assert_eq!(splitting_numbers(&d, Complex64::new(1.0, 0.0)).unwrap(), (1, 1));
        let d = single(BasicNormalForm::N1 { lambda: 1, a: -1 });
        assert_eq!(splitting_numbers(&d, Complex64::new(1.0, 0.0)).unwrap(), (0, 0));
        let d = single(BasicNormalForm::R { turns: Real::ratio(1, 5) });
        let w = Complex64::from_polar(1.0, TAU / 5.0);
        assert_eq!(splitting_numbers(&d, w).unwrap(), (0, 1));
        assert_eq!(splitting_numbers(&d, w.conj()).unwrap(), (1, 0));
        let t = splitting_table(&d);
        assert_eq!(t.c(), 1);
        assert_eq!(t.weighted_minus(), Real::ratio(2, 5));
    }

    #[test]
    fn n2_rows() {
        for trivial in [true, false] {
            let d = single(BasicNormalForm::n2_canonical(Real::ratio(1, 3), trivial));
            let w = Complex64::from_polar(1.0, TAU / 3.0);
            let expect = if trivial { (0, 0) } else { (1, 1) };
            assert_eq!(splitting_numbers(&d, w).unwrap(), expect);
            assert_eq!(splitting_numbers(&d, w.conj()).unwrap(), expect);
        }
    }

    #[test]
    fn ambiguous_probe() {
        let d = single(BasicNormalForm::R { turns: Real::ratio(1, 5) });
        let w = Complex64::from_polar(1.0, TAU / 5.0 + 1e-6);
        assert!(matches!(splitting_numbers(&d, w), Err(Error::AmbiguousSpectrum { .. })));
    }

    #[test]
    fn oracle_matches_table() {
        let blocks = [
            BasicNormalForm::R { turns: Real::ratio(1, 5) },
            BasicNormalForm::n2_canonical(Real::ratio(1, 5), true),
            BasicNormalForm::n2_canonical(Real::ratio(1, 5), false),
            BasicNormalForm::N1 { lambda: -1, a: 1 },
            BasicNormalForm::N1 { lambda: -1, a: -1 },
            BasicNormalForm::N1 { lambda: -1, a: 0 },
        ];
        for b in blocks {
            let m = make_normal_form(&b).unwrap();
            let p = SymplecticPath::from_atoms(vec![crate::path::Atom::generic(m).unwrap()]).unwrap();
            let d = single(b.clone());
            for th in [TAU / 5.0, TAU * 4.0 / 5.0, std::f64::consts::PI, 1.0] {
                let w = Complex64::from_polar(1.0, th);
                assert_eq!(splitting_oracle(&p, th).unwrap(), splitting_numbers(&d, w).unwrap(), "{} at {th}", b.label());
            }
        }
    }
}
