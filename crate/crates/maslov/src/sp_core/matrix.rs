use crate::error::{Error, Result};
use crate::linalg::{j_matrix, mat_pow, max_abs, Mat};

/// Relative tolerance for `M^T J M = J` and `det M = 1`.
pub const SYMPLECTIC_TOL: f64 = 1e-9;

/// A real `2m x 2m` matrix preserving the standard symplectic form.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix {
    m: Mat,
}

/// `max |M^T J M - J| / max(1, max|M|^2)`.
pub fn symplectic_residual(m: &Mat) -> f64 {
    let j = j_matrix(m.nrows());
    let r = m.transpose() * &j * m - j;
    let scale = max_abs(m).max(1.0);
    max_abs(&r) / (scale * scale)
}

impl SymplecticMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "expected a square matrix of even size, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("matrix has non-finite entries".into()));
        }
        let residual = symplectic_residual(&m);
        if residual > SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic { residual });
        }
        if m.nrows() > 0 {
            let det = m.determinant();
            let scale = max_abs(&m).max(1.0).powi(m.nrows() as i32);
            if (det - 1.0).abs() > SYMPLECTIC_TOL * scale.max(1.0) * 10.0 {
                return Err(Error::NotSymplectic { residual: (det - 1.0).abs() });
            }
        }
        Ok(SymplecticMatrix { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("matrix rows must all have the row count as length".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(Mat::from_row_slice(n, n, &flat))
    }

    /// Wrap a matrix known to be symplectic by construction.
    pub(crate) fn trusted(m: Mat) -> Self {
        debug_assert!(m.nrows() == 0 || symplectic_residual(&m) < 1e-6);
        SymplecticMatrix { m }
    }

    pub fn identity(dim: usize) -> Self {
        SymplecticMatrix { m: Mat::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn half_dim(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.m.row(i).iter().copied().collect()).collect()
    }

    /// `self * other`.
    pub fn compose(&self, other: &SymplecticMatrix) -> SymplecticMatrix {
        SymplecticMatrix { m: &self.m * &other.m }
    }

    pub fn pow(&self, k: u64) -> SymplecticMatrix {
        SymplecticMatrix { m: mat_pow(&self.m, k) }
    }

    /// `M^{-1} = -J M^T J`.
    pub fn inverse(&self) -> SymplecticMatrix {
        let j = j_matrix(self.dim());
        SymplecticMatrix { m: -(&j * self.m.transpose() * &j) }
    }

    /// `Q M Q^{-1}`.
    pub fn conjugate_by(&self, q: &SymplecticMatrix) -> SymplecticMatrix {
        q.compose(self).compose(&q.inverse())
    }

    pub fn distance(&self, other: &SymplecticMatrix) -> f64 {
        max_abs(&(&self.m - &other.m))
    }

    /// `det(Id - M)`.
    pub fn det_id_minus(&self) -> f64 {
        if self.dim() == 0 {
            return 1.0;
        }
        (Mat::identity(self.dim(), self.dim()) - &self.m).determinant()
    }
}

/// The symplectic direct sum: with `M_k = [[A_k, B_k], [C_k, D_k]]` the result is
/// `[[A1, 0, B1, 0], [0, A2, 0, B2], [C1, 0, D1, 0], [0, C2, 0, D2]]`.
pub fn diamond(a: &SymplecticMatrix, b: &SymplecticMatrix) -> SymplecticMatrix {
    let p = a.half_dim();
    let q = b.half_dim();
    let n = p + q;
    let mut out = Mat::zeros(2 * n, 2 * n);
    let ia = |i: usize| if i < p { i } else { n + i - p };
    let ib = |i: usize| if i < q { p + i } else { n + p + i - q };
    for i in 0..2 * p {
        for j in 0..2 * p {
            out[(ia(i), ia(j))] = a.m[(i, j)];
        }
    }
    for i in 0..2 * q {
        for j in 0..2 * q {
            out[(ib(i), ib(j))] = b.m[(i, j)];
        }
    }
    SymplecticMatrix { m: out }
}

pub fn diamond_all<'a>(parts: impl IntoIterator<Item = &'a SymplecticMatrix>) -> SymplecticMatrix {
    parts.into_iter().fold(SymplecticMatrix::identity(0), |acc, x| diamond(&acc, x))
}

/// Positions of each ⋄-slot's coordinates inside the assembled matrix.
pub fn diamond_slot_indices(half_dims: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = half_dims.iter().sum();
    let mut offset = 0;
    let mut out = Vec::with_capacity(half_dims.len());
    for &h in half_dims {
        let mut idx: Vec<usize> = (offset..offset + h).collect();
        idx.extend((n + offset)..(n + offset + h));
        out.push(idx);
        offset += h;
    }
    out
}

/// Extract the ⋄-slot occupying the given coordinates.
pub fn slot_block(m: &SymplecticMatrix, idx: &[usize]) -> SymplecticMatrix {
    let k = idx.len();
    let mut out = Mat::zeros(k, k);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[(a, b)] = m.m[(i, j)];
        }
    }
    SymplecticMatrix { m: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rot2;

    #[test]
    fn diamond_layout() {
        let a = SymplecticMatrix::trusted(rot2(0.3));
        let b = SymplecticMatrix::trusted(rot2(1.1));
        let d = diamond(&a, &b);
        let m = d.matrix();
        assert_eq!(m[(0, 0)], 0.3f64.cos());
        assert_eq!(m[(0, 2)], -(0.3f64.sin()));
        assert_eq!(m[(1, 1)], 1.1f64.cos());
        assert_eq!(m[(3, 1)], 1.1f64.sin());
        assert_eq!(m[(0, 1)], 0.0);
        assert!(symplectic_residual(m) < 1e-15);
        let idx = diamond_slot_indices(&[1, 1]);
        assert_eq!(slot_block(&d, &idx[1]), b);
    }

    #[test]
    fn rejects_non_symplectic() {
        let m = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        assert!(matches!(SymplecticMatrix::new(m), Err(Error::NotSymplectic { .. })));
        let m = Mat::zeros(3, 3);
        assert!(matches!(SymplecticMatrix::new(m), Err(Error::Dimension(_))));
    }

    #[test]
    fn inverse_is_inverse() {
        let a = SymplecticMatrix::trusted(Mat::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0]));
        let p = a.compose(&a.inverse());
        assert!(p.distance(&SymplecticMatrix::identity(2)) < 1e-15);
    }
}
