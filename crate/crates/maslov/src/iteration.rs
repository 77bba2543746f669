//! The precise iteration formula and what follows from it: Bott nullities,
//! degree shifts, the non-degenerate part and dynamical convexity.

use crate::error::{Error, Result};
use crate::exact::Real;
use crate::linalg::{kernel_dim, to_complex, CMat};
use crate::path::IndexReport;
use crate::sp_core::{angle_rationality, decompose_normal_form, NormalFormDecomposition, Rationality, SymplecticMatrix};
use crate::splitting::SplittingTable;
use crate::tol;

fn overflow() -> Error {
    Error::Overflow("iteration formula exceeds i64".into())
}

/// `ceil(k * turns)` with exact arithmetic where possible.
fn ceil_k(turns: &Real, k: u64) -> Result<i64> {
    let kt = turns.mul(&Real::int(k as i64));
    kt.ceil_guarded(tol::CEIL_GUARD)
        .ok_or(Error::ResonantCeiling { value: kt.to_f64(), guard: tol::CEIL_GUARD })
}

/// `mu-(Phi^k) = k(mu- + S+(1) - C) + 2 sum ceil(k theta / 2pi) S-(e^{i theta}) - (S+(1) + C)`.
pub fn iterate_mu_minus(base: i64, t: &SplittingTable, k: u64) -> Result<i64> {
    if k == 0 {
        return Err(Error::Parameter("iteration count must be positive".into()));
    }
    let sp1 = t.at_one().0 as i64;
    let c = t.c() as i64;
    let ki = i64::try_from(k).map_err(|_| overflow())?;
    let mut acc = ki.checked_mul(base + sp1 - c).ok_or_else(overflow)?;
    for e in t.circle() {
        if e.s_minus == 0 {
            continue;
        }
        let ceil = ceil_k(&e.turns.fract(), k)?;
        let term = ceil.checked_mul(2 * e.s_minus as i64).ok_or_else(overflow)?;
        acc = acc.checked_add(term).ok_or_else(overflow)?;
    }
    Ok(acc - (sp1 + c))
}

/// Whether `e^{2 pi i turns}` is a `k`-th root of unity, refusing near misses.
fn is_kth_root(turns: &Real, k: u64) -> Result<bool> {
    match angle_rationality(turns, tol::q_max()) {
        Rationality::Rational { q, .. } => Ok(k % q == 0),
        Rationality::Irrational => Ok(false),
        Rationality::BeyondBound { .. } => {
            let x = turns.to_f64() * k as f64;
            if (x - x.round()).abs() < tol::CEIL_GUARD {
                Err(Error::ResonantCeiling { value: x, guard: tol::CEIL_GUARD })
            } else {
                Ok(false)
            }
        }
    }
}

/// `nu(Phi^k)` as the sum of `nu_omega` over `k`-th roots of unity.
pub fn bott_nullity_of(d: &NormalFormDecomposition, k: u64) -> Result<usize> {
    let table = crate::splitting::splitting_table(d);
    let mut total = 0;
    for e in &table.entries {
        if is_kth_root(&e.turns, k)? {
            total += e.nullity;
        }
    }
    Ok(total)
}

pub fn bott_nullity(m: &SymplecticMatrix, k: u64) -> Result<usize> {
    if k == 0 {
        return Err(Error::Parameter("iteration count must be positive".into()));
    }
    bott_nullity_of(&decompose_normal_form(m)?, k)
}

/// `dim ker(M^k - Id)` computed directly.
pub fn direct_nullity(m: &SymplecticMatrix, k: u64) -> usize {
    let n = m.dim();
    let a = to_complex(m.pow(k).matrix()) - CMat::identity(n, n);
    kernel_dim(&a, tol::KERNEL)
}

/// Iteration data of one path: everything `mu-(Phi^k)` and `nu(Phi^k)` depend on.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationProfile {
    pub base_mu_minus: i64,
    pub table: SplittingTable,
    pub mean: Real,
    pub endpoint: NormalFormDecomposition,
}

impl IterationProfile {
    pub fn from_report(r: &IndexReport) -> IterationProfile {
        IterationProfile {
            base_mu_minus: r.lower,
            table: r.table.clone(),
            mean: r.mean,
            endpoint: r.endpoint.clone(),
        }
    }

    pub fn mu_minus(&self, k: u64) -> Result<i64> {
        iterate_mu_minus(self.base_mu_minus, &self.table, k)
    }

    pub fn nullity(&self, k: u64) -> Result<usize> {
        bott_nullity_of(&self.endpoint, k)
    }

    pub fn mu_plus(&self, k: u64) -> Result<i64> {
        Ok(self.mu_minus(k)? + self.nullity(k)? as i64)
    }
}

/// Residual of `mu-hat = mu- + S+(1) - C + sum (theta/pi) S-`.
pub fn mean_identity_residual(r: &IndexReport) -> f64 {
    let rhs = Real::int(r.lower + r.splitting_at_one.0 as i64 - r.c as i64).add(&r.table.weighted_minus());
    (r.mean.to_f64() - rhs.to_f64()).abs()
}

pub fn mean_identity_check(r: &IndexReport) -> bool {
    mean_identity_residual(r) <= tol::INTEGER_SNAP
}

/// `mu-(Phi^k) - mu-(Phi)`, asserted equal to the shift of `mu+`.
pub fn degree_shift(base: &IndexReport, iterated: &IndexReport, admissible: bool) -> Result<i64> {
    if !admissible {
        return Err(Error::Parameter("degree shift needs an admissible iterate".into()));
    }
    let lower = iterated.lower - base.lower;
    let upper = iterated.upper - base.upper;
    if lower != upper {
        return Err(Error::Consistency(format!("degree shifts disagree: mu- moved {lower}, mu+ moved {upper}")));
    }
    Ok(lower)
}

/// Data of the non-degenerate part `Psi` of a path.
#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneratePart {
    pub reduced_dim: usize,
    pub reduced_mu: i64,
    pub reduced_mean: Real,
}

pub fn nondegenerate_part(r: &IndexReport, endpoint: &NormalFormDecomposition) -> NondegeneratePart {
    NondegeneratePart {
        reduced_dim: r.dim - endpoint.eigenvalue_one_dim(),
        reduced_mu: r.lower + r.splitting_at_one.0 as i64,
        reduced_mean: r.mean,
    }
}

/// Outcome of the dynamical-convexity checks.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicalConvexity {
    /// `mu- >= m + 2`.
    pub flag: bool,
    /// Growth bounds along iterations, checked only when flagged.
    pub growth_bound: bool,
    /// `mu- + 2 S+(1) - nu >= 2`.
    pub geq_two: bool,
    pub k_max: u64,
}

pub const GROWTH_K_MAX: u64 = 100;

pub fn dynamical_convexity(r: &IndexReport) -> Result<DynamicalConvexity> {
    dynamical_convexity_upto(r, GROWTH_K_MAX)
}

pub fn dynamical_convexity_upto(r: &IndexReport, k_max: u64) -> Result<DynamicalConvexity> {
    let m = r.half_dim() as i64;
    let flag = r.lower >= m + 2;
    let geq_two = r.lower + 2 * r.splitting_at_one.0 as i64 - r.nullity as i64 >= 2;
    let mut growth_bound = true;
    if flag {
        let mut prev = r.lower;
        for k in 1..=k_max {
            let cur = iterate_mu_minus(r.lower, &r.table, k)?;
            if cur < 2 * k as i64 + m || (k > 1 && cur < prev + (r.lower - m)) {
                growth_bound = false;
                break;
            }
            prev = cur;
        }
    }
    Ok(DynamicalConvexity { flag, growth_bound, geq_two, k_max })
}
