//! Orbit systems: prime closed orbits with actions and linearised paths, the
//! ellipsoid fixtures, degree bookkeeping and Euler-characteristic visibility.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::exact::{Real, Surd};
use crate::iteration::{dynamical_convexity, IterationProfile};
use crate::path::{index_report, Atom, IndexReport, Segment, SymplecticPath};
use crate::sp_core::{angle_rationality, classify_decomposition, IterationClass, Rationality};
use crate::tol;

/// A prime closed orbit: label, action and the linearised path of its first iterate.
#[derive(Clone, Debug)]
pub struct PrimeOrbitSpec {
    pub label: String,
    pub action: f64,
    pub path: SymplecticPath,
    report: IndexReport,
    profile: IterationProfile,
}

impl PrimeOrbitSpec {
    pub fn new(label: impl Into<String>, action: f64, path: SymplecticPath) -> Result<Self> {
        if !(action > 0.0 && action.is_finite()) {
            return Err(Error::Parameter(format!("orbit action must be positive, got {action}")));
        }
        let report = index_report(&path)?;
        let profile = IterationProfile::from_report(&report);
        Ok(PrimeOrbitSpec { label: label.into(), action, path, report, profile })
    }

    pub fn report(&self) -> &IndexReport {
        &self.report
    }

    pub fn profile(&self) -> &IterationProfile {
        &self.profile
    }

    pub fn half_dim(&self) -> usize {
        self.path.half_dim()
    }

    pub fn action_of(&self, k: u64) -> f64 {
        self.action * k as f64
    }

    pub fn mean(&self) -> Real {
        self.report.mean
    }

    pub fn mean_of(&self, k: u64) -> Real {
        self.report.mean.mul(&Real::int(k as i64))
    }

    pub fn mu_minus(&self, k: u64) -> Result<i64> {
        self.profile.mu_minus(k)
    }

    pub fn mu_plus(&self, k: u64) -> Result<i64> {
        self.profile.mu_plus(k)
    }

    pub fn nullity(&self, k: u64) -> Result<usize> {
        self.profile.nullity(k)
    }

    pub fn classify(&self, k: u64) -> IterationClass {
        classify_decomposition(&self.report.endpoint, k, tol::q_max())
    }
}

/// A finite family of prime orbits on a `(2n-1)`-dimensional hypersurface.
#[derive(Clone, Debug)]
pub struct OrbitSystem {
    pub n: usize,
    pub orbits: Vec<PrimeOrbitSpec>,
    /// Index of the least-action orbit.
    pub x0: usize,
}

impl OrbitSystem {
    pub fn new(n: usize, orbits: Vec<PrimeOrbitSpec>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter("orbit systems need n >= 2".into()));
        }
        if orbits.is_empty() {
            return Err(Error::Input("orbit system has no orbits".into()));
        }
        if let Some(o) = orbits.iter().find(|o| o.path.dim() != 2 * (n - 1)) {
            return Err(Error::Dimension(format!(
                "orbit {} has path dimension {}, expected {}",
                o.label,
                o.path.dim(),
                2 * (n - 1)
            )));
        }
        let x0 = (0..orbits.len()).min_by(|&a, &b| orbits[a].action.total_cmp(&orbits[b].action)).expect("non-empty");
        Ok(OrbitSystem { n, orbits, x0 })
    }

    /// Sub-system with the chosen orbits, in the given order.
    pub fn subsystem(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.n, idx.iter().map(|&i| self.orbits[i].clone()).collect())
    }

    pub fn is_dynamically_convex(&self) -> bool {
        self.orbits.iter().all(|o| o.report().dyn_convex)
    }

    /// `mu-(x0) = n + 1`, expected of dynamically convex systems with finitely many orbits.
    pub fn x0_check(&self) -> Result<bool> {
        Ok(self.orbits[self.x0].mu_minus(1)? == self.n as i64 + 1)
    }
}

/// `E_n(r)`: one prime orbit per axis, orbit `i` with action `2 pi r_i`.
///
/// The path of orbit `i` rotates slot `j` by `r_i / r_j` turns and then runs
/// one full loop in the first slot; the loop is the capping-disk correction
/// of the coordinate trivialisation.
pub fn ellipsoid_system(r: &[Real]) -> Result<OrbitSystem> {
    let n = r.len();
    if n < 2 {
        return Err(Error::Parameter("an ellipsoid needs at least two radii".into()));
    }
    if let Some(x) = r.iter().find(|x| x.to_f64().partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::Parameter(format!("ellipsoid radii must be positive, got {x}")));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                if let Rationality::Rational { q, .. } = angle_rationality(&r[i].div(&r[j]), tol::q_max()) {
                    if q <= tol::q_max() {
                        return Err(Error::RationalRatio { i: i + 1, j: j + 1 });
                    }
                }
            }
        }
    }
    let mut orbits = Vec::with_capacity(n);
    for i in 0..n {
        let rot: Vec<Atom> = (0..n).filter(|&j| j != i).map(|j| Atom::rotation(r[i].div(&r[j]))).collect();
        let lp: Vec<Atom> =
            (0..n - 1).map(|s| Atom::rotation(if s == 0 { Real::int(1) } else { Real::zero() })).collect();
        let path = SymplecticPath::symbolic(vec![Segment::new(rot), Segment::new(lp)])?;
        orbits.push(PrimeOrbitSpec::new(format!("x{}", i + 1), TAU * r[i].to_f64(), path)?);
    }
    OrbitSystem::new(n, orbits)
}

/// `E_2(1, sqrt 2)`.
pub fn e2_fixture() -> OrbitSystem {
    ellipsoid_system(&[Real::int(1), Real::Exact(Surd::sqrt(2))]).expect("fixture is valid")
}

/// `E_3(1, phi, phi^2)`.
pub fn e3_fixture() -> OrbitSystem {
    let phi = Surd::phi();
    let phi2 = phi.checked_mul(&phi).expect("small surd");
    ellipsoid_system(&[Real::int(1), Real::Exact(phi), Real::Exact(phi2)]).expect("fixture is valid")
}

/// Degree of an orbit iterate: a point for non-degenerate iterates, an
/// interval `[mu-, mu+]` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    Point(i64),
    Interval(i64, i64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityRecord {
    pub good: bool,
    /// `None` for degenerate iterates.
    pub euler: Option<i32>,
    pub degree: Degree,
    pub visible: bool,
}

fn parity_sign(x: i64) -> i32 {
    if x.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Visibility and Euler characteristic of `x^k`.
pub fn euler_visibility(spec: &PrimeOrbitSpec, k: u64) -> Result<VisibilityRecord> {
    let class = spec.classify(k);
    let lo = spec.mu_minus(k)?;
    let hi = spec.mu_plus(k)?;
    let m = spec.half_dim() as f64;
    let mean = spec.mean_of(k).to_f64();
    if (lo as f64) < mean - m - 1e-9 || (hi as f64) > mean + m + 1e-9 {
        return Err(Error::Consistency(format!("[{lo}, {hi}] escapes the mean-index window around {mean}")));
    }
    if hi != lo {
        return Ok(VisibilityRecord { good: class.good_if_iterate, euler: None, degree: Degree::Interval(lo, hi), visible: true });
    }
    let euler = if class.good_if_iterate { parity_sign(lo) } else { 0 };
    if class.admissible && (k % 2 == 1 || class.neg_interval_count % 2 == 0) && spec.nullity(1)? == 0 {
        let base = parity_sign(spec.mu_minus(1)?);
        if euler != base {
            return Err(Error::Consistency(format!("Euler characteristic of {}^{k} changed under iteration", spec.label)));
        }
    }
    Ok(VisibilityRecord { good: class.good_if_iterate, euler: Some(euler), degree: Degree::Point(lo), visible: euler != 0 })
}

/// `deg(x^k) = deg(x) + mu+(x^k) - mu+(x)` for admissible `k`.
pub fn deg_iterate(spec: &PrimeOrbitSpec, base_deg: i64, k: u64) -> Result<i64> {
    if !spec.classify(k).admissible {
        return Err(Error::NotAdmissible { k });
    }
    Ok(base_deg + spec.mu_plus(k)? - spec.mu_plus(1)?)
}

/// Degrees of visible iterates up to a cutoff, with the bijection check.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeTable {
    pub cutoff: i64,
    /// Degree to `(orbit index, iterate)`; several entries mean a collision.
    pub degrees: BTreeMap<i64, Vec<(usize, u64)>>,
    /// Degenerate iterates with their degree intervals.
    pub intervals: Vec<(usize, u64, i64, i64)>,
    /// First failure of the bijection or of action monotonicity, if any.
    pub problem: Option<String>,
    /// True when degenerate entries made the bijection check inapplicable.
    pub skipped: bool,
}

impl DegreeTable {
    pub fn is_bijective(&self) -> bool {
        self.problem.is_none() && !self.skipped
    }
}

/// All visible iterate degrees up to `cutoff`; never fails on a bijection problem.
pub fn degree_table(system: &OrbitSystem, cutoff: i64) -> Result<DegreeTable> {
    let m = (system.n - 1) as i64;
    let mut degrees: BTreeMap<i64, Vec<(usize, u64)>> = BTreeMap::new();
    let mut intervals = Vec::new();
    for (i, o) in system.orbits.iter().enumerate() {
        let mean = o.mean().to_f64();
        if mean <= 0.0 {
            return Err(Error::Parameter(format!("orbit {} has non-positive mean index", o.label)));
        }
        let k_max = ((cutoff + m) as f64 / mean).floor().max(0.0) as u64 + 1;
        for k in 1..=k_max {
            let v = euler_visibility(o, k)?;
            match v.degree {
                Degree::Point(d) if v.visible && d <= cutoff => degrees.entry(d).or_default().push((i, k)),
                Degree::Interval(lo, hi) if lo <= cutoff => intervals.push((i, k, lo, hi)),
                _ => {}
            }
        }
    }
    let skipped = !intervals.is_empty();
    let mut problem = None;
    if !skipped {
        let n = system.n as i64;
        let mut expect = n + 1;
        let mut last_action = f64::NEG_INFINITY;
        for (&d, who) in &degrees {
            if who.len() > 1 {
                let names: Vec<String> =
                    who.iter().map(|&(i, k)| format!("{}^{}", system.orbits[i].label, k)).collect();
                problem = Some(format!("degree {d} is taken by {}", names.join(", ")));
                break;
            }
            if d != expect {
                problem = Some(if d < expect {
                    format!("unexpected degree {d}")
                } else {
                    format!("degree {expect} is missing")
                });
                break;
            }
            let (i, k) = who[0];
            let a = system.orbits[i].action_of(k);
            if a <= last_action {
                problem = Some(format!("degree {d} has smaller action than degree {}", d - 2));
                break;
            }
            last_action = a;
            expect += 2;
        }
        if problem.is_none() && expect <= cutoff {
            problem = Some(format!("degree {expect} is missing"));
        }
    }
    Ok(DegreeTable { cutoff, degrees, intervals, problem, skipped })
}

/// [`degree_table`] that turns a bijection failure into an error.
pub fn degree_assignment(system: &OrbitSystem, cutoff: i64) -> Result<DegreeTable> {
    let t = degree_table(system, cutoff)?;
    match &t.problem {
        Some(p) => Err(Error::Verification(format!("degree bijection fails: {p}"))),
        None => Ok(t),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionRatio {
    pub ratio: f64,
    pub max_deviation: f64,
    pub worst: Option<String>,
}

/// `A(x) / mu-hat(x)` over the first `count` visible iterates by action.
pub fn action_ratio(system: &OrbitSystem, count: usize) -> Result<ActionRatio> {
    let mut its: Vec<(f64, usize, u64)> = Vec::new();
    let min_action = system.orbits.iter().map(|o| o.action).fold(f64::INFINITY, f64::min);
    let horizon = min_action * (count as f64 + 1.0);
    for (i, o) in system.orbits.iter().enumerate() {
        let mut k = 1;
        while o.action_of(k) <= horizon {
            its.push((o.action_of(k), i, k));
            k += 1;
        }
    }
    its.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ratio = None;
    let mut max_deviation: f64 = 0.0;
    let mut worst = None;
    let mut taken = 0;
    for (a, i, k) in its {
        if taken == count {
            break;
        }
        let o = &system.orbits[i];
        if !euler_visibility(o, k)?.visible {
            continue;
        }
        taken += 1;
        let r = a / o.mean_of(k).to_f64();
        let r0 = *ratio.get_or_insert(r);
        if (r - r0).abs() > max_deviation {
            max_deviation = (r - r0).abs();
            worst = Some(format!("{}^{}", o.label, k));
        }
    }
    Ok(ActionRatio { ratio: ratio.unwrap_or(f64::NAN), max_deviation, worst })
}

/// [`action_ratio`] failing when the ratio drifts by more than `1e-10`.
pub fn action_ratio_check(system: &OrbitSystem, count: usize) -> Result<ActionRatio> {
    let r = action_ratio(system, count)?;
    if r.max_deviation >= 1e-10 {
        return Err(Error::Verification(format!(
            "action/mean ratio drifts by {:.3e} at {}",
            r.max_deviation,
            r.worst.as_deref().unwrap_or("?")
        )));
    }
    Ok(r)
}

/// Dynamical convexity of every orbit, with the growth bounds.
pub fn system_convexity(system: &OrbitSystem) -> Result<bool> {
    for o in &system.orbits {
        let dc = dynamical_convexity(o.report())?;
        if !(dc.flag && dc.growth_bound) {
            return Ok(false);
        }
    }
    Ok(true)
}
