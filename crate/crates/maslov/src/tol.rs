//! Numerical tolerances shared across modules.

/// Eigenvalues closer than this are merged into one cluster.
pub const CLUSTER: f64 = 1e-6;
/// Distinct clusters closer than this are reported as ambiguous.
pub const AMBIGUITY: f64 = 1e-4;
/// `| |lambda| - 1 |` below this puts a cluster on the unit circle.
pub const UNIT_CIRCLE: f64 = 1e-8;
/// Relative singular-value threshold for kernels.
pub const KERNEL: f64 = 1e-8;
/// Quantities proven integral must be this close to an integer.
pub const INTEGER_SNAP: f64 = 1e-6;
/// Guard band around integers for floating ceilings.
pub const CEIL_GUARD: f64 = 1e-9;
/// Denominator bound for root-of-unity detection.
pub const Q_MAX: u64 = 1_000_000;
/// A float angle matches a convergent `p/q` when closer than this.
pub const ROOT_MATCH: f64 = 1e-14;

static Q_BOUND: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(Q_MAX);

/// Current denominator bound; [`Q_MAX`] unless changed with [`set_q_max`].
pub fn q_max() -> u64 {
    Q_BOUND.load(std::sync::atomic::Ordering::Relaxed)
}

/// Process-wide override of the denominator bound, used by the command line.
pub fn set_q_max(q: u64) {
    Q_BOUND.store(q.max(1), std::sync::atomic::Ordering::Relaxed);
}
