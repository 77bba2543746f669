//! Generic atom: a path from `Id` to an arbitrary symplectic `M` through the
//! polar decomposition `M = QP`, with `Q(t) = exp(t log Q)` and `P(t) = P^t`.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CMat, Mat};
use crate::sp_core::SymplecticMatrix;

#[derive(Clone, Debug)]
pub struct GenericAtom {
    target: SymplecticMatrix,
    /// Unitary eigenvectors of the orthogonal factor viewed in `U(m)`.
    v: CMat,
    /// Eigen-angles in `(-pi, pi]`.
    alpha: Vec<f64>,
    /// Eigenvectors and log-eigenvalues of `P`.
    w: Mat,
    log_sigma: Vec<f64>,
}

impl PartialEq for GenericAtom {
    fn eq(&self, other: &Self) -> bool {
        self.target == other.target
    }
}

fn unitary_of(q: &Mat) -> CMat {
    let m = q.nrows() / 2;
    CMat::from_fn(m, m, |i, j| Complex64::new(q[(i, j)], q[(m + i, j)]))
}

fn real_of(u: &CMat) -> Mat {
    let m = u.nrows();
    let mut out = Mat::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let z = u[(i, j)];
            out[(i, j)] = z.re;
            out[(i, m + j)] = -z.im;
            out[(m + i, j)] = z.im;
            out[(m + i, m + j)] = z.re;
        }
    }
    out
}

/// Eigen-decomposition of a unitary matrix through a generic Hermitian combination.
fn unitary_eigen(u: &CMat) -> Result<(CMat, Vec<f64>)> {
    let m = u.nrows();
    let uh = u.adjoint();
    let half = Complex64::new(0.5, 0.0);
    for &c in &[0.577_215_664_9, 1.324_717_957, -0.915_965_594, std::f64::consts::E] {
        let re = (u + &uh).map(|z| z * half);
        let im = (u - &uh).map(|z| z * Complex64::new(0.0, -0.5));
        let h = re + im.map(|z| z * c);
        let h = (&h + h.adjoint()).map(|z| z * half);
        let eig = SymmetricEigen::new(h);
        let v = eig.eigenvectors;
        let d = v.adjoint() * u * &v;
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| d[(i, j)].norm())
            .fold(0.0, f64::max);
        if off < 1e-10 {
            let alpha = (0..m)
                .map(|i| {
                    let a = d[(i, i)].arg();
                    if a <= -PI + 1e-12 {
                        PI
                    } else {
                        a
                    }
                })
                .collect();
            return Ok((v, alpha));
        }
    }
    Err(Error::Consistency("could not diagonalise the unitary factor of a generic atom".into()))
}

impl GenericAtom {
    pub fn new(target: SymplecticMatrix) -> Result<Self> {
        let mt = &target.matrix().clone();
        let n = mt.nrows();
        if n == 0 {
            return Err(Error::Dimension("generic atom needs a non-empty matrix".into()));
        }
        let gram = mt.transpose() * mt;
        let gram = (&gram + gram.transpose()) * 0.5;
        let eig = SymmetricEigen::new(gram);
        let w = eig.eigenvectors;
        let log_sigma: Vec<f64> = eig.eigenvalues.iter().map(|&s| 0.5 * s.max(f64::MIN_POSITIVE).ln()).collect();
        let p_inv = &w * Mat::from_diagonal(&nalgebra::DVector::from_iterator(n, log_sigma.iter().map(|l| (-l).exp()))) * w.transpose();
        let q = mt * p_inv;
        let (v, alpha) = unitary_eigen(&unitary_of(&q))?;
        let atom = GenericAtom { target, v, alpha, w, log_sigma };
        let end = atom.eval(1.0);
        if end.distance(&atom.target) > 1e-8 * crate::linalg::max_abs(mt).max(1.0) {
            return Err(Error::Consistency(format!(
                "generic atom misses its target by {:.3e}",
                end.distance(&atom.target)
            )));
        }
        Ok(atom)
    }

    pub fn target(&self) -> &SymplecticMatrix {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn eval(&self, t: f64) -> SymplecticMatrix {
        let m = self.alpha.len();
        let phases = nalgebra::DVector::from_iterator(m, self.alpha.iter().map(|a| Complex64::from_polar(1.0, a * t)));
        let u = &self.v * CMat::from_diagonal(&phases) * self.v.adjoint();
        let n = self.log_sigma.len();
        let p = &self.w
            * Mat::from_diagonal(&nalgebra::DVector::from_iterator(n, self.log_sigma.iter().map(|l| (l * t).exp())))
            * self.w.transpose();
        SymplecticMatrix::trusted(real_of(&u) * p)
    }

    /// Rough bound on how fast the rotation function can turn, in turns per unit time.
    pub fn speed(&self) -> f64 {
        let rot: f64 = self.alpha.iter().map(|a| a.abs()).sum::<f64>() / (2.0 * PI);
        let stretch: f64 = self.log_sigma.iter().map(|l| l.abs()).sum();
        rot + stretch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rot2;

    #[test]
    fn reaches_target_and_stays_symplectic() {
        let m = Mat::from_row_slice(2, 2, &[2.0, 1.0, 3.0, 2.0]);
        let target = SymplecticMatrix::new(m).unwrap();
        let g = GenericAtom::new(target.clone()).unwrap();
        assert!(g.eval(1.0).distance(&target) < 1e-12);
        assert!(g.eval(0.0).distance(&SymplecticMatrix::identity(2)) < 1e-12);
        for i in 0..=10 {
            let x = g.eval(i as f64 / 10.0);
            assert!(crate::sp_core::symplectic_residual(x.matrix()) < 1e-12);
        }
    }

    #[test]
    fn minus_identity_uses_angle_pi() {
        let target = SymplecticMatrix::trusted(rot2(PI));
        let g = GenericAtom::new(target).unwrap();
        assert!((g.eval(0.5).matrix() - rot2(PI / 2.0)).amax() < 1e-12);
    }
}
