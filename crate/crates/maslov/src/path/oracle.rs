//! Perturbation oracle for `(mu-, mu+)`: nudge every degenerate `Sp(2)` slot of
//! the endpoint, index each non-degenerate neighbour from a closed-form
//! `Sp(2)` catalog, and take extremes over all sign combinations.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use super::{mean_index, SymplecticPath};
use crate::error::{Error, Result};
use crate::linalg::{rot2, Mat};
use crate::tol;

const EPS: f64 = 1e-4;

/// Elliptic angle in `(0, 2pi)` read from trace and lower-left entry.
fn elliptic_angle(n: &Mat) -> f64 {
    let c = (0.5 * (n[(0, 0)] + n[(1, 1)])).clamp(-1.0, 1.0);
    let a = c.acos();
    if n[(1, 0)] > 0.0 {
        a
    } else {
        TAU - a
    }
}

fn trace(n: &Mat) -> f64 {
    n[(0, 0)] + n[(1, 1)]
}

/// `rho` on `Sp(2)` straight from the trace catalog.
fn rho2(n: &Mat) -> Complex64 {
    let tr = trace(n);
    if tr.abs() < 2.0 {
        Complex64::from_polar(1.0, elliptic_angle(n))
    } else {
        Complex64::new(tr.signum(), 0.0)
    }
}

/// `mu - mu-hat` for a non-degenerate `Sp(2)` endpoint.
fn correction(n: &Mat) -> f64 {
    if trace(n).abs() < 2.0 {
        1.0 - elliptic_angle(n) / PI
    } else {
        0.0
    }
}

fn nudges() -> Vec<Mat> {
    let (ch, sh) = (EPS.cosh(), EPS.sinh());
    vec![
        rot2(EPS),
        rot2(-EPS),
        Mat::from_row_slice(2, 2, &[EPS.exp(), 0.0, 0.0, (-EPS).exp()]),
        Mat::from_row_slice(2, 2, &[(-EPS).exp(), 0.0, 0.0, EPS.exp()]),
        Mat::from_row_slice(2, 2, &[ch, sh, sh, ch]),
        Mat::from_row_slice(2, 2, &[ch, -sh, -sh, ch]),
    ]
}

/// Attainable indices of non-degenerate neighbours of one `Sp(2)` slot.
fn slot_range(sub: &SymplecticPath) -> Result<(i64, i64)> {
    let mean = mean_index(sub)?.to_f64();
    let m = sub.endpoint().matrix().clone();
    let degenerate = (2.0 - trace(&m)).abs() < 1e-8;
    let candidates: Vec<Mat> = if degenerate { nudges().into_iter().map(|x| &m * x).collect() } else { vec![m.clone()] };
    let base = rho2(&m);
    let mut values = Vec::new();
    for n in candidates {
        let det = 2.0 - trace(&n);
        if det.abs() < 1e-12 {
            continue;
        }
        let short = (rho2(&n) / base).arg() / PI;
        let raw = mean + short + correction(&n);
        let mu = raw.round();
        if (raw - mu).abs() > tol::INTEGER_SNAP {
            return Err(Error::Consistency(format!("perturbed index {raw} is not an integer")));
        }
        let mu = mu as i64;
        let parity = if (mu - 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        if parity != det.signum() {
            return Err(Error::Consistency(format!("perturbed index {mu} violates the parity rule")));
        }
        values.push(mu);
    }
    match (values.iter().min(), values.iter().max()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::UnsupportedDegeneracy("no perturbation of the endpoint became non-degenerate".into())),
    }
}

/// `(mu-, mu+)` as the extremes of `mu` over the nudge family. Supported for
/// slot-aligned paths whose slots are all `2 x 2`.
pub fn perturbation_oracle(p: &SymplecticPath) -> Result<(i64, i64)> {
    let slots = p
        .slots()
        .ok_or_else(|| Error::UnsupportedDegeneracy("perturbation oracle needs a slot-aligned symbolic path".into()))?;
    if slots.iter().any(|(s, _)| s.dim() != 2) {
        return Err(Error::UnsupportedDegeneracy("perturbation oracle handles 2x2 slots only".into()));
    }
    let mut lo = 0;
    let mut hi = 0;
    for (sub, _) in &slots {
        let (a, b) = slot_range(sub)?;
        lo += a;
        hi += b;
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Real;
    use crate::path::Atom;

    #[test]
    fn identity_and_full_loop() {
        assert_eq!(perturbation_oracle(&SymplecticPath::constant(2)).unwrap(), (-1, 1));
        assert_eq!(perturbation_oracle(&SymplecticPath::rotation(Real::int(1))).unwrap(), (1, 3));
    }

    #[test]
    fn shear_and_rotation() {
        let p = SymplecticPath::from_atoms(vec![Atom::Shear { a: 1.0 }, Atom::rotation(Real::ratio(7, 10))]).unwrap();
        assert_eq!(perturbation_oracle(&p).unwrap(), (0, 1));
        let p = SymplecticPath::from_atoms(vec![Atom::Shear { a: -1.0 }]).unwrap();
        assert_eq!(perturbation_oracle(&p).unwrap(), (0, 1));
    }
}
