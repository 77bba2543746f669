//! Small dense linear algebra on top of nalgebra: complex kernels, inertia of
//! Hermitian forms, and the standard symplectic structure.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// `J = [[0, -I], [I, 0]]` of size `n2 x n2`.
pub fn j_matrix(n2: usize) -> Mat {
    let m = n2 / 2;
    let mut j = Mat::zeros(n2, n2);
    for i in 0..m {
        j[(i, m + i)] = -1.0;
        j[(m + i, i)] = 1.0;
    }
    j
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Orthogonal matrix built from Givens rotations by fixed irrational angles.
fn scramble(n: usize, seed: f64) -> Mat {
    let mut q = Mat::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let (s, c) = (seed * (1 + i + 2 * j) as f64).sin_cos();
            let mut g = Mat::identity(n, n);
            g[(i, i)] = c;
            g[(j, j)] = c;
            g[(i, j)] = -s;
            g[(j, i)] = s;
            q = g * q;
        }
    }
    q
}

/// Eigenvalues through a bounded Schur iteration. Francis steps can stall
/// on highly symmetric orthogonal inputs, so on failure the matrix is
/// conjugated by a fixed orthogonal scramble and retried.
pub fn eigenvalues(m: &Mat) -> Vec<Complex64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let attempt = |a: Mat| Schur::try_new(a, f64::EPSILON, 2000).map(|s| s.complex_eigenvalues().iter().copied().collect());
    if let Some(ev) = attempt(m.clone()) {
        return ev;
    }
    for seed in [0.618_033_988_7, std::f64::consts::SQRT_2, 2.236_067_977_4] {
        let q = scramble(n, seed);
        if let Some(ev) = attempt(q.transpose() * m * &q) {
            return ev;
        }
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Singular values in ascending order with the matching right singular vectors as columns.
pub fn svd_ascending(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.ncols();
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut v = CMat::zeros(n, idx.len());
    let mut s = Vec::with_capacity(idx.len());
    for (c, &i) in idx.iter().enumerate() {
        s.push(svd.singular_values[i]);
        for r in 0..n {
            v[(r, c)] = vt[(i, r)].conj();
        }
    }
    (s, v)
}

/// Number of singular values below `rel * max(1, sigma_max)`.
pub fn kernel_dim(a: &CMat, rel: f64) -> usize {
    if a.nrows() == 0 {
        return 0;
    }
    let (s, _) = svd_ascending(a);
    let top = s.last().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x <= rel * top).count()
}

/// Orthonormal columns spanning the `k` smallest right singular directions.
pub fn smallest_right_vectors(a: &CMat, k: usize) -> CMat {
    let (_, v) = svd_ascending(a);
    v.columns(0, k).into_owned()
}

/// Inertia `(positive, negative)` of a Hermitian matrix. Eigenvalues below
/// `rel * max|eig|`, or below the absolute `floor`, count as zero. The floor
/// keeps a form that vanishes up to rounding from reading as definite.
pub fn hermitian_inertia(h: &CMat, rel: f64, floor: f64) -> (usize, usize) {
    if h.nrows() == 0 {
        return (0, 0);
    }
    let sym = (h + h.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let top = eig.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let cut = (rel * top).max(floor).max(f64::MIN_POSITIVE);
    let pos = eig.iter().filter(|&&x| x > cut).count();
    let neg = eig.iter().filter(|&&x| x < -cut).count();
    (pos, neg)
}

pub fn mat_pow(m: &Mat, k: u64) -> Mat {
    let mut out = Mat::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            out = &out * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    out
}

pub fn cmat_pow(m: &CMat, k: usize) -> CMat {
    let mut out = CMat::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// `2x2` rotation by `theta`.
pub fn rot2(theta: f64) -> Mat {
    let (s, c) = theta.sin_cos();
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}
