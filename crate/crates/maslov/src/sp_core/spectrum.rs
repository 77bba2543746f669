use num_complex::Complex64;

use super::matrix::SymplecticMatrix;
use crate::error::{Error, Result};
use crate::linalg::{cmat_pow, eigenvalues, hermitian_inertia, j_matrix, kernel_dim, smallest_right_vectors, to_complex, CMat};
use crate::tol;

/// One eigenvalue family after clustering.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenCluster {
    /// Mean of the member eigenvalues; snapped to the real axis or unit circle when within tolerance.
    pub value: Complex64,
    pub multiplicity: usize,
    pub on_circle: bool,
    /// Inertia of the Krein form on the generalized eigenspace (unit clusters only).
    pub krein_pos: usize,
    pub krein_neg: usize,
}

impl EigenCluster {
    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }

    /// Angle in `[0, 2pi)` of a unit cluster.
    pub fn angle(&self) -> f64 {
        let a = self.value.im.atan2(self.value.re);
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    pub clusters: Vec<EigenCluster>,
    /// Total algebraic multiplicity of negative real eigenvalues.
    pub m0: usize,
}

impl SpectralData {
    /// Eigenvalues with multiplicity, one entry per cluster.
    pub fn eigenvalues(&self) -> Vec<(Complex64, usize)> {
        self.clusters.iter().map(|c| (c.value, c.multiplicity)).collect()
    }

    pub fn unit_flags(&self) -> Vec<bool> {
        self.clusters.iter().map(|c| c.on_circle).collect()
    }

    pub fn unit_clusters(&self) -> impl Iterator<Item = &EigenCluster> {
        self.clusters.iter().filter(|c| c.on_circle)
    }

    /// Cluster containing `lambda`, if any.
    pub fn find(&self, lambda: Complex64) -> Option<&EigenCluster> {
        self.clusters.iter().find(|c| (c.value - lambda).norm() < tol::CLUSTER * 10.0)
    }
}

fn cluster_indices(ev: &[Complex64], eps: f64) -> Vec<Vec<usize>> {
    let n = ev.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (ev[i] - ev[j]).norm() < eps {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut label = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[label[r]].push(i);
    }
    groups
}

/// Krein inertia on the generalized eigenspace of `value` (multiplicity `k`).
fn krein_inertia(m: &SymplecticMatrix, value: Complex64, k: usize) -> (usize, usize) {
    let n = m.dim();
    let mc = to_complex(m.matrix());
    let shifted = &mc - CMat::identity(n, n) * value;
    let basis = smallest_right_vectors(&cmat_pow(&shifted, k.min(n)), k);
    let g = to_complex(&j_matrix(n)).map(|z| z * Complex64::new(0.0, -1.0));
    let h = basis.adjoint() * g * &basis;
    // the basis is orthonormal and |G| = 1, so the form is O(1)
    hermitian_inertia(&h, 1e-6, 1e-9)
}

fn compute(m: &SymplecticMatrix, strict: bool) -> Result<SpectralData> {
    let ev = eigenvalues(m.matrix());
    let groups = cluster_indices(&ev, tol::CLUSTER);
    let mut clusters = Vec::with_capacity(groups.len());
    for g in &groups {
        let mut c = g.iter().map(|&i| ev[i]).sum::<Complex64>() / g.len() as f64;
        if c.im.abs() < tol::CLUSTER {
            c.im = 0.0;
        }
        let on_circle = (c.norm() - 1.0).abs() < tol::UNIT_CIRCLE;
        if on_circle {
            c /= c.norm();
            if c.im.abs() < tol::CLUSTER {
                c = Complex64::new(c.re.signum(), 0.0);
            }
        }
        let k = g.len();
        let (krein_pos, krein_neg) = if !on_circle {
            (0, 0)
        } else if c.im == 0.0 {
            (k / 2, k - k / 2)
        } else {
            let (p, q) = krein_inertia(m, c, k);
            if p + q != k {
                if strict {
                    return Err(Error::UnsupportedDegeneracy(format!(
                        "Krein form degenerate on the eigenspace of {c:.6} (inertia {p}+{q} of {k})"
                    )));
                }
                // Lenient use only feeds rho. A numerically degenerate form means a
                // near-collision of opposite Krein types, so split the rest evenly.
                let r = k.saturating_sub(p + q);
                let p2 = (p + r / 2).min(k);
                (p2, k - p2)
            } else {
                (p, q)
            }
        };
        clusters.push(EigenCluster { value: c, multiplicity: k, on_circle, krein_pos, krein_neg });
    }
    if strict {
        for (i, a) in clusters.iter().enumerate() {
            for b in &clusters[i + 1..] {
                let dist = (a.value - b.value).norm();
                if dist < tol::AMBIGUITY {
                    return Err(Error::AmbiguousSpectrum {
                        a: format!("{:.9}", a.value),
                        b: format!("{:.9}", b.value),
                        distance: dist,
                    });
                }
            }
        }
    }
    clusters.sort_by(|a, b| {
        a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im))
    });
    let m0 = clusters.iter().filter(|c| c.is_real() && c.value.re < 0.0).map(|c| c.multiplicity).sum();
    Ok(SpectralData { clusters, m0 })
}

/// Clustered spectrum with Krein signatures; errors on ambiguous clustering.
pub fn spectral_data(m: &SymplecticMatrix) -> Result<SpectralData> {
    compute(m, true)
}

/// Same as [`spectral_data`] but never fails; used along paths where
/// near-collisions are expected and harmless.
pub(crate) fn spectral_data_lenient(m: &SymplecticMatrix) -> SpectralData {
    compute(m, false).expect("lenient spectral data is infallible")
}

/// `dim_C ker(M - omega Id)`.
pub fn nullity_omega(m: &SymplecticMatrix, omega: Complex64) -> usize {
    let n = m.dim();
    let a = to_complex(m.matrix()) - CMat::identity(n, n) * omega;
    kernel_dim(&a, tol::KERNEL)
}
