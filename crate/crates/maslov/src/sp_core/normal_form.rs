use std::f64::consts::TAU;

use num_complex::Complex64;

use super::matrix::{diamond, diamond_all, SymplecticMatrix};
use super::spectrum::spectral_data;
use crate::error::{Error, Result};
use crate::exact::{same_turns, Real};
use crate::linalg::{
    cmat_pow, hermitian_inertia, j_matrix, kernel_dim, rot2, smallest_right_vectors, to_complex, CMat, Mat,
};
use crate::tol;

/// The model blocks of the homotopy classification. Angles are carried in
/// turns (`theta / 2pi`) so rational and quadratic-irrational angles stay exact.
#[derive(Clone, Debug, PartialEq)]
pub enum BasicNormalForm {
    /// `diag(lambda, 1/lambda)`, `lambda` real with `|lambda| != 1`.
    D { lambda: f64 },
    /// `[[lambda, a], [0, lambda]]` with `lambda = +-1`, `a` in `{-1, 0, 1}`.
    N1 { lambda: i8, a: i8 },
    /// Rotation by `2pi * turns`, `turns` in `(0, 1/2) u (1/2, 1)`.
    R { turns: Real },
    /// `[[R(theta), b], [0, R(theta)]]`; `b = [b1, b2, b3, b4]` row-major.
    N2 { turns: Real, b: [f64; 4], trivial: bool },
}

impl BasicNormalForm {
    pub fn dim(&self) -> usize {
        match self {
            BasicNormalForm::N2 { .. } => 4,
            _ => 2,
        }
    }

    /// Rotation block with the angle reduced into `[0, 1)` turns, mapping the
    /// degenerate angles to `Id` and `-Id`.
    pub fn rotation(turns: Real) -> BasicNormalForm {
        let f = turns.fract();
        if f.signum() == 0 {
            return BasicNormalForm::N1 { lambda: 1, a: 0 };
        }
        if f == Real::ratio(1, 2) {
            return BasicNormalForm::N1 { lambda: -1, a: 0 };
        }
        BasicNormalForm::R { turns: f }
    }

    /// An `N2` block with a canonical symplectic `b` of the requested type.
    pub fn n2_canonical(turns: Real, trivial: bool) -> BasicNormalForm {
        let theta = TAU * turns.to_f64();
        let (s, c) = theta.sin_cos();
        let t = if trivial { s.signum() } else { -s.signum() };
        // b2 - b3 = t and b1 = b4 = u with (b3 - b2) cos = (b1 + b4) sin.
        let u = -t * c / (2.0 * s);
        BasicNormalForm::N2 { turns, b: [u, t / 2.0, -t / 2.0, u], trivial }
    }

    /// Unit eigenvalue angle in turns (`lambda = e^{2 pi i turns}`), `None` for `D`.
    pub fn unit_turns(&self) -> Option<Real> {
        match self {
            BasicNormalForm::D { .. } => None,
            BasicNormalForm::N1 { lambda, .. } => Some(if *lambda > 0 { Real::zero() } else { Real::ratio(1, 2) }),
            BasicNormalForm::R { turns } | BasicNormalForm::N2 { turns, .. } => Some(*turns),
        }
    }

    /// Nullity at `e^{2 pi i x}` where `x` is given in turns.
    pub fn nullity_at_turns(&self, x: &Real) -> usize {
        let same = |t: &Real| same_turns(t, x);
        match self {
            BasicNormalForm::D { .. } => 0,
            BasicNormalForm::N1 { lambda, a } => {
                let t = if *lambda > 0 { Real::zero() } else { Real::ratio(1, 2) };
                if same(&t) {
                    if *a == 0 { 2 } else { 1 }
                } else {
                    0
                }
            }
            BasicNormalForm::R { turns } => usize::from(same(turns)) + usize::from(same(&turns.neg())),
            BasicNormalForm::N2 { turns, .. } => usize::from(same(turns)) + usize::from(same(&turns.neg())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BasicNormalForm::D { lambda } => format!("D({lambda})"),
            BasicNormalForm::N1 { lambda, a } => format!("N1({lambda},{a})"),
            BasicNormalForm::R { turns } => format!("R(2pi*{})", turns),
            BasicNormalForm::N2 { turns, trivial, .. } => {
                format!("N2(2pi*{},{})", turns, if *trivial { "trivial" } else { "non-trivial" })
            }
        }
    }
}

/// The literal matrix of a basic normal form.
pub fn make_normal_form(spec: &BasicNormalForm) -> Result<SymplecticMatrix> {
    match spec {
        BasicNormalForm::D { lambda } => {
            if !lambda.is_finite() || *lambda == 0.0 || (lambda.abs() - 1.0).abs() < tol::UNIT_CIRCLE {
                return Err(Error::Parameter(format!("D(lambda) needs real |lambda| != 1, got {lambda}")));
            }
            Ok(SymplecticMatrix::trusted(Mat::from_row_slice(2, 2, &[*lambda, 0.0, 0.0, 1.0 / lambda])))
        }
        BasicNormalForm::N1 { lambda, a } => {
            if lambda.abs() != 1 || a.abs() > 1 {
                return Err(Error::Parameter(format!("N1 needs lambda = +-1 and a in {{-1,0,1}}, got ({lambda},{a})")));
            }
            let l = *lambda as f64;
            Ok(SymplecticMatrix::trusted(Mat::from_row_slice(2, 2, &[l, *a as f64, 0.0, l])))
        }
        BasicNormalForm::R { turns } => {
            let t = turns.to_f64();
            if !(0.0 < t && t < 1.0) || (t - 0.5).abs() < 1e-15 {
                return Err(Error::Parameter(format!("R(theta) needs theta/2pi in (0,1/2) u (1/2,1), got {t}")));
            }
            Ok(SymplecticMatrix::trusted(rot2(TAU * t)))
        }
        BasicNormalForm::N2 { turns, b, trivial } => {
            let t = turns.to_f64();
            let theta = TAU * t;
            if !(0.0 < t && t < 1.0) || (t - 0.5).abs() < 1e-15 {
                return Err(Error::Parameter(format!("N2 needs theta/2pi in (0,1/2) u (1/2,1), got {t}")));
            }
            let (s, c) = theta.sin_cos();
            let scale = b.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            if ((b[2] - b[1]) * c - (b[0] + b[3]) * s).abs() > 1e-9 * scale {
                return Err(Error::Parameter(format!("N2 block b = {b:?} is not symplectic for theta = {theta}")));
            }
            let sign = (b[1] - b[2]) * s;
            if sign.abs() < 1e-12 * scale {
                return Err(Error::Parameter("N2 block needs (b2 - b3) sin(theta) != 0".into()));
            }
            if (sign > 0.0) != *trivial {
                return Err(Error::Parameter(format!(
                    "N2 triviality flag {trivial} contradicts sign((b2-b3) sin theta) = {}",
                    sign.signum()
                )));
            }
            let r = rot2(theta);
            let mut m = Mat::zeros(4, 4);
            m.view_mut((0, 0), (2, 2)).copy_from(&r);
            m.view_mut((2, 2), (2, 2)).copy_from(&r);
            m.view_mut((0, 2), (2, 2)).copy_from(&Mat::from_row_slice(2, 2, b));
            Ok(SymplecticMatrix::trusted(m))
        }
    }
}

/// Basic blocks for the unit spectrum plus a hyperbolic rest.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormDecomposition {
    pub blocks: Vec<BasicNormalForm>,
    pub rest: SymplecticMatrix,
}

impl NormalFormDecomposition {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum::<usize>() + self.rest.dim()
    }

    /// `block_1 ⋄ ... ⋄ block_r ⋄ rest`.
    pub fn assemble(&self) -> Result<SymplecticMatrix> {
        let mats = self.blocks.iter().map(make_normal_form).collect::<Result<Vec<_>>>()?;
        Ok(diamond(&diamond_all(&mats), &self.rest))
    }

    /// Concatenate decompositions of ⋄-summands.
    pub fn join(parts: &[NormalFormDecomposition]) -> NormalFormDecomposition {
        let blocks = parts.iter().flat_map(|p| p.blocks.iter().cloned()).collect();
        let rest = diamond_all(parts.iter().map(|p| &p.rest));
        NormalFormDecomposition { blocks, rest }
    }

    /// Eigenvalues of the rest (all off the unit circle).
    pub fn rest_eigenvalues(&self) -> Vec<Complex64> {
        crate::linalg::eigenvalues(self.rest.matrix())
    }

    /// Nullity at `e^{2 pi i x}`.
    pub fn nullity_at_turns(&self, x: &Real) -> usize {
        self.blocks.iter().map(|b| b.nullity_at_turns(x)).sum()
    }

    pub fn nullity_at_one(&self) -> usize {
        self.nullity_at_turns(&Real::zero())
    }

    /// Total dimension of eigenvalue-1 blocks.
    pub fn eigenvalue_one_dim(&self) -> usize {
        self.blocks.iter().filter(|b| matches!(b, BasicNormalForm::N1 { lambda: 1, .. })).map(|b| b.dim()).sum()
    }
}

fn real_kernel_sq_basis(n_mat: &Mat, k: usize) -> Mat {
    let sq = n_mat * n_mat;
    let basis = smallest_right_vectors(&to_complex(&sq), k);
    // The kernel of a real matrix has a real basis; take the real span by
    // orthonormalising real and imaginary parts together.
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::new();
    for j in 0..basis.ncols() {
        cols.push(basis.column(j).map(|z| z.re));
        cols.push(basis.column(j).map(|z| z.im));
    }
    let n = n_mat.nrows();
    let stacked = Mat::from_columns(&cols);
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = Mat::zeros(n, k);
    for (c, &i) in idx.iter().take(k).enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Size below which a sign form restricted to an orthonormal basis is rounding.
fn form_floor(m: &SymplecticMatrix) -> f64 {
    1e-9 * m.matrix().amax().max(1.0)
}

fn decompose_real_unit(m: &SymplecticMatrix, sign: i8, a: usize, out: &mut Vec<BasicNormalForm>) -> Result<()> {
    let n = m.dim();
    let nm = m.matrix() - Mat::identity(n, n) * sign as f64;
    let g = kernel_dim(&to_complex(&nm), tol::KERNEL);
    let g2 = kernel_dim(&to_complex(&(&nm * &nm)), tol::KERNEL);
    if g2 != a {
        return Err(Error::UnsupportedDegeneracy(format!(
            "Jordan block of size >= 3 at eigenvalue {sign} (multiplicity {a}, dim ker (M-{sign})^2 = {g2})"
        )));
    }
    if 2 * g < a || (2 * g - a) % 2 != 0 {
        return Err(Error::Consistency(format!("eigenvalue {sign}: multiplicity {a} and nullity {g} are incompatible")));
    }
    let jordan = a - g;
    let w = real_kernel_sq_basis(&nm, a);
    let form = w.transpose() * j_matrix(n) * &nm * &w;
    let form = (&form + form.transpose()) * 0.5;
    let (pos, neg) = hermitian_inertia(&to_complex(&form), 1e-6, form_floor(m));
    if pos + neg != jordan {
        return Err(Error::Consistency(format!(
            "eigenvalue {sign}: {jordan} Jordan blocks but sign form has inertia ({pos},{neg})"
        )));
    }
    for _ in 0..(2 * g - a) / 2 {
        out.push(BasicNormalForm::N1 { lambda: sign, a: 0 });
    }
    for _ in 0..pos {
        out.push(BasicNormalForm::N1 { lambda: sign, a: 1 });
    }
    for _ in 0..neg {
        out.push(BasicNormalForm::N1 { lambda: sign, a: -1 });
    }
    Ok(())
}

fn decompose_elliptic(
    m: &SymplecticMatrix,
    omega: Complex64,
    a: usize,
    krein: (usize, usize),
    out: &mut Vec<BasicNormalForm>,
) -> Result<()> {
    let n = m.dim();
    let nm = to_complex(m.matrix()) - CMat::identity(n, n) * omega;
    let g = kernel_dim(&nm, tol::KERNEL);
    let g2 = kernel_dim(&cmat_pow(&nm, 2), tol::KERNEL);
    if g2 != a {
        return Err(Error::UnsupportedDegeneracy(format!(
            "Jordan block of size >= 3 at eigenvalue {omega:.6} (multiplicity {a}, dim ker (M-w)^2 = {g2})"
        )));
    }
    let jordan = a - g;
    let (p, q) = krein;
    if p < jordan || q < jordan {
        return Err(Error::Consistency(format!(
            "eigenvalue {omega:.6}: {jordan} Jordan blocks need Krein inertia at least ({jordan},{jordan}), got ({p},{q})"
        )));
    }
    let theta = omega.im.atan2(omega.re);
    let turns = theta / TAU;
    let (mut trivial, mut nontrivial) = (0, 0);
    if jordan > 0 {
        let e = smallest_right_vectors(&cmat_pow(&nm, 2), a);
        let g_form = to_complex(&j_matrix(n)).map(|z| z * Complex64::new(0.0, -1.0));
        let phi = e.adjoint() * g_form * &nm * &e;
        let h = phi.map(|z| z * Complex64::new(0.0, -1.0) * omega.conj());
        let (pos, neg) = hermitian_inertia(&h, 1e-6, form_floor(m));
        if pos + neg != jordan {
            return Err(Error::Consistency(format!(
                "eigenvalue {omega:.6}: {jordan} Jordan blocks but N2 form has inertia ({pos},{neg})"
            )));
        }
        trivial = pos;
        nontrivial = neg;
    }
    for _ in 0..p - jordan {
        out.push(BasicNormalForm::R { turns: Real::Float(turns) });
    }
    for _ in 0..q - jordan {
        out.push(BasicNormalForm::R { turns: Real::Float(1.0 - turns) });
    }
    for _ in 0..trivial {
        out.push(BasicNormalForm::n2_canonical(Real::Float(turns), true));
    }
    for _ in 0..nontrivial {
        out.push(BasicNormalForm::n2_canonical(Real::Float(turns), false));
    }
    Ok(())
}

/// Canonical hyperbolic matrix with the given off-circle spectrum (one entry per
/// eigenvalue outside the unit disk, conjugate pairs listed once with `im > 0`).
fn hyperbolic_rest(outside: &[(Complex64, usize)]) -> SymplecticMatrix {
    let mut parts = Vec::new();
    for &(z, k) in outside {
        for _ in 0..k {
            if z.im == 0.0 {
                parts.push(SymplecticMatrix::trusted(Mat::from_row_slice(2, 2, &[z.re, 0.0, 0.0, 1.0 / z.re])));
            } else {
                let a = Mat::from_row_slice(2, 2, &[z.re, -z.im, z.im, z.re]);
                let ait = a.clone().try_inverse().expect("nonzero eigenvalue").transpose();
                let mut m = Mat::zeros(4, 4);
                m.view_mut((0, 0), (2, 2)).copy_from(&a);
                m.view_mut((2, 2), (2, 2)).copy_from(&ait);
                parts.push(SymplecticMatrix::trusted(m));
            }
        }
    }
    diamond_all(&parts)
}

/// Split `m` into basic normal forms carrying its unit spectrum and a hyperbolic rest.
pub fn decompose_normal_form(m: &SymplecticMatrix) -> Result<NormalFormDecomposition> {
    let spec = spectral_data(m)?;
    let mut blocks = Vec::new();
    let mut outside = Vec::new();
    for c in &spec.clusters {
        if c.on_circle {
            if c.is_real() {
                let sign = if c.value.re > 0.0 { 1 } else { -1 };
                decompose_real_unit(m, sign, c.multiplicity, &mut blocks)?;
            } else if c.value.im > 0.0 {
                decompose_elliptic(m, c.value, c.multiplicity, (c.krein_pos, c.krein_neg), &mut blocks)?;
            }
        } else if c.value.norm() > 1.0 && c.value.im >= 0.0 {
            outside.push((c.value, c.multiplicity));
        }
    }
    let rest = hyperbolic_rest(&outside);
    let d = NormalFormDecomposition { blocks, rest };
    if d.dim() != m.dim() {
        return Err(Error::Consistency(format!(
            "decomposition covers dimension {} of {}",
            d.dim(),
            m.dim()
        )));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(t: f64) -> BasicNormalForm {
        BasicNormalForm::R { turns: Real::Float(t) }
    }

    #[test]
    fn literal_matrices() {
        let d = make_normal_form(&BasicNormalForm::D { lambda: 2.0 }).unwrap();
        assert_eq!(d.matrix(), &Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]));
        let n = make_normal_form(&BasicNormalForm::N1 { lambda: 1, a: 1 }).unwrap();
        assert_eq!(n.matrix(), &Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        let q = make_normal_form(&r(0.25)).unwrap();
        assert!((q.matrix() - Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn n2_parameter_checks() {
        for &t in &[0.1, 0.3, 0.6, 0.85] {
            for &triv in &[true, false] {
                let b = BasicNormalForm::n2_canonical(Real::Float(t), triv);
                let m = make_normal_form(&b).unwrap();
                assert!(crate::sp_core::matrix::symplectic_residual(m.matrix()) < 1e-14);
            }
        }
        let bad = BasicNormalForm::N2 { turns: Real::Float(0.1), b: [1.0, 0.0, 0.0, 0.0], trivial: true };
        assert!(matches!(make_normal_form(&bad), Err(Error::Parameter(_))));
    }

    #[test]
    fn decomposes_n2_types() {
        for &t in &[0.1, 0.3, 0.6, 0.85] {
            for &triv in &[true, false] {
                let m = make_normal_form(&BasicNormalForm::n2_canonical(Real::Float(t), triv)).unwrap();
                let d = decompose_normal_form(&m).unwrap();
                assert_eq!(d.blocks.len(), 1, "{t} {triv}: {:?}", d.blocks);
                match &d.blocks[0] {
                    BasicNormalForm::N2 { trivial, turns, .. } => {
                        assert_eq!(*trivial, triv, "turns {t}");
                        let expect = if t < 0.5 { t } else { 1.0 - t };
                        assert!((turns.to_f64() - expect).abs() < 1e-9);
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
        }
    }

    #[test]
    fn semisimple_unit_eigenvalue_beside_rotations() {
        let parts: Vec<SymplecticMatrix> = [r(8.0 / 11.0), BasicNormalForm::N1 { lambda: -1, a: 0 }, r(4.0 / 7.0)]
            .iter()
            .map(|b| make_normal_form(b).unwrap())
            .collect();
        let d = decompose_normal_form(&diamond_all(&parts)).unwrap();
        assert!(d.blocks.contains(&BasicNormalForm::N1 { lambda: -1, a: 0 }), "{:?}", d.blocks);
        let parts: Vec<SymplecticMatrix> =
            [BasicNormalForm::N1 { lambda: 1, a: 1 }, BasicNormalForm::N1 { lambda: 1, a: 0 }]
                .iter()
                .map(|b| make_normal_form(b).unwrap())
                .collect();
        let mut got = decompose_normal_form(&diamond_all(&parts)).unwrap().blocks;
        got.sort_by_key(|b| b.label());
        assert_eq!(got, vec![BasicNormalForm::N1 { lambda: 1, a: 0 }, BasicNormalForm::N1 { lambda: 1, a: 1 }]);
    }

    #[test]
    fn decomposes_shears_and_identity() {
        for (lambda, a) in [(1, 1), (1, -1), (1, 0), (-1, 1), (-1, -1), (-1, 0)] {
            let m = make_normal_form(&BasicNormalForm::N1 { lambda, a }).unwrap();
            let d = decompose_normal_form(&m).unwrap();
            assert_eq!(d.blocks, vec![BasicNormalForm::N1 { lambda, a }]);
        }
    }

    #[test]
    fn hyperbolic_goes_to_rest() {
        let m = diamond(
            &make_normal_form(&BasicNormalForm::D { lambda: 2.0 }).unwrap(),
            &make_normal_form(&BasicNormalForm::D { lambda: -2.0 }).unwrap(),
        );
        let d = decompose_normal_form(&m).unwrap();
        assert!(d.blocks.is_empty());
        assert_eq!(d.rest.dim(), 4);
    }
}
