use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

use super::SymplecticPath;
use crate::error::{Error, Result};
use crate::sp_core::{spectral_data, spectral_data_lenient, SpectralData, SymplecticMatrix};

const MAX_DEPTH: u32 = 48;
const MAX_EVALS: usize = 400_000;

fn rho_from(sd: &SpectralData) -> Complex64 {
    let mut z = if (sd.m0 / 2) % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(-1.0, 0.0) };
    for c in sd.unit_clusters().filter(|c| !c.is_real()) {
        let unit = c.value / c.value.norm();
        z *= unit.powu(c.krein_pos as u32);
    }
    z / z.norm()
}

/// The rotation function `rho: Sp(2m) -> S^1`.
pub fn rho(m: &SymplecticMatrix) -> Result<Complex64> {
    Ok(rho_from(&spectral_data(m)?))
}

/// `rho` without ambiguity errors, for sampling along paths.
pub(crate) fn rho_lenient(m: &SymplecticMatrix) -> Complex64 {
    rho_from(&spectral_data_lenient(m))
}

struct Budget {
    evals: usize,
}

fn refine<F: Fn(f64) -> Complex64>(
    f: &F,
    (a, fa): (f64, Complex64),
    (b, fb): (f64, Complex64),
    depth: u32,
    budget: &mut Budget,
) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() < FRAC_PI_2 {
        return Ok(d);
    }
    if depth >= MAX_DEPTH || budget.evals >= MAX_EVALS {
        return Err(Error::RefinementExhausted { resolution: b - a });
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    budget.evals += 1;
    Ok(refine(f, (a, fa), (mid, fm), depth + 1, budget)? + refine(f, (mid, fm), (b, fb), depth + 1, budget)?)
}

/// Continuous argument increment of `rho_fn(Phi(t))` over `[0,1]`, divided by `pi`.
pub(crate) fn winding_with<R: Fn(&SymplecticMatrix) -> Complex64>(p: &SymplecticPath, rho_fn: R) -> Result<f64> {
    let mut total = 0.0;
    let mut budget = Budget { evals: 0 };
    for piece in p.pieces() {
        let f = |tau: f64| rho_fn(&piece.seg.eval(tau).compose(&piece.start));
        let n = ((8.0 * piece.seg.speed()).ceil() as usize).clamp(4, 4096);
        let mut prev = (0.0, f(0.0));
        for i in 1..=n {
            let t = i as f64 / n as f64;
            let cur = (t, f(t));
            budget.evals += 1;
            total += refine(&f, prev, cur, 0, &mut budget)?;
            prev = cur;
        }
    }
    Ok(total / PI)
}

/// Numerical mean index: the `rho`-winding of the whole path divided by `pi`.
pub fn winding(p: &SymplecticPath) -> Result<f64> {
    winding_with(p, rho_lenient)
}
