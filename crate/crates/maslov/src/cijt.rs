//! Common index jump events: verified search over multiples of `N`,
//! Gamma-classification of iterates at an event, and interchange pairs.

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::exact::Real;
use crate::orbits::{euler_visibility, Degree, OrbitSystem};
use crate::par::{self, Exec};
use crate::sp_core::{angle_rationality, Rationality};
use crate::tol;

/// How far on either side of `k_i` the dynamical-convexity bounds are checked.
pub const BOUND_WINDOW: u64 = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct NData {
    pub n: u64,
    pub p: u64,
    pub s: Vec<u64>,
}

/// `N = 2 p prod s_i!` with `p` the lcm of root-of-unity orders and `s_i`
/// the largest `s` with `A(x_i^s) <= A(x_0)`.
pub fn compute_n(system: &OrbitSystem) -> Result<NData> {
    let mut p: u64 = 1;
    for o in &system.orbits {
        for b in &o.report().endpoint.blocks {
            let Some(t) = b.unit_turns() else { continue };
            match angle_rationality(&t, tol::q_max()) {
                Rationality::Rational { q, .. } if q > tol::q_max() => return Err(Error::RootBeyondBound(tol::q_max())),
                Rationality::Rational { q, .. } => {
                    p = p.lcm(&q);
                    if p > tol::q_max() {
                        return Err(Error::RootBeyondBound(tol::q_max()));
                    }
                }
                _ => {}
            }
        }
    }
    let a0 = system.orbits[system.x0].action;
    let mut n: u64 = 2 * p;
    let mut s = Vec::new();
    for (i, o) in system.orbits.iter().enumerate() {
        if i == system.x0 {
            continue;
        }
        let si = (a0 / o.action * (1.0 + 1e-12)).floor() as u64;
        s.push(si);
        for f in 2..=si {
            n = n.checked_mul(f).ok_or_else(|| Error::Overflow("N does not fit in u64".into()))?;
        }
    }
    Ok(NData { n, p, s })
}

/// Outcome of the dynamical-convexity bound clauses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundStatus {
    Passed,
    Failed(String),
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathCheck {
    /// `mu-hat(Phi_i^{k_i}) - d`.
    pub deviation: f64,
    pub ir1: bool,
    pub ir2: bool,
    pub ir3: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventChecks {
    pub divisible: bool,
    pub paths: Vec<PathCheck>,
    pub bounds: BoundStatus,
    /// Names of failed clauses.
    pub failures: Vec<String>,
}

impl EventChecks {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CijtEvent {
    pub d: i64,
    pub k: Vec<u64>,
    pub eta: f64,
    pub n: u64,
    pub checks: EventChecks,
}

impl CijtEvent {
    pub fn deviations(&self) -> Vec<f64> {
        self.checks.paths.iter().map(|p| p.deviation).collect()
    }
}

fn deviation(system: &OrbitSystem, i: usize, k: u64, d: i64) -> Real {
    system.orbits[i].mean_of(k).sub(&Real::int(d))
}

/// Recompute every clause of an event from scratch.
pub fn verify_clauses(system: &OrbitSystem, d: i64, k: &[u64], eta: f64, n: u64) -> Result<EventChecks> {
    if k.len() != system.orbits.len() {
        return Err(Error::Dimension(format!("event has {} iterates for {} orbits", k.len(), system.orbits.len())));
    }
    let mut failures = Vec::new();
    let divisible = n > 0 && d % n as i64 == 0 && k.iter().all(|&x| x % n == 0);
    if !divisible {
        failures.push("divisibility".to_string());
    }
    let m = (system.n - 1) as i64;
    let mut paths = Vec::with_capacity(k.len());
    for (i, (&ki, o)) in k.iter().zip(&system.orbits).enumerate() {
        let dev = deviation(system, i, ki, d).to_f64();
        let ir1 = ki >= 1 && dev.abs() < eta;
        let (ir2, ir3) = if ki >= 2 {
            let r = o.report();
            let ir2 = o.mu_minus(ki + 1)? == d + r.lower && o.mu_plus(ki + 1)? == d + r.upper;
            let target = d - (r.lower + 2 * r.splitting_at_one.0 as i64 - r.nullity as i64);
            (ir2, o.mu_plus(ki - 1)? == target)
        } else {
            (false, false)
        };
        for (ok, name) in [(ir1, "IR1"), (ir2, "IR2"), (ir3, "IR3")] {
            if !ok {
                failures.push(format!("{name}[{}]", o.label));
            }
        }
        paths.push(PathCheck { deviation: dev, ir1, ir2, ir3 });
    }
    let bounds = if !system.is_dynamically_convex() {
        BoundStatus::NotApplicable
    } else {
        let mut status = BoundStatus::Passed;
        'outer: for (&ki, o) in k.iter().zip(&system.orbits) {
            for l in 1..=BOUND_WINDOW {
                if o.mu_minus(ki + l)? < d + 2 + m {
                    status = BoundStatus::Failed(format!("mu-({}^{}) < d+2+m", o.label, ki + l));
                    break 'outer;
                }
                if ki > l && o.mu_plus(ki - l)? > d - 2 {
                    status = BoundStatus::Failed(format!("mu+({}^{}) > d-2", o.label, ki - l));
                    break 'outer;
                }
            }
        }
        status
    };
    if let BoundStatus::Failed(s) = &bounds {
        failures.push(format!("bounds: {s}"));
    }
    Ok(EventChecks { divisible, paths, bounds, failures })
}

/// Re-verify an event; the stored checks are ignored.
pub fn verify_event(system: &OrbitSystem, e: &CijtEvent) -> Result<EventChecks> {
    verify_clauses(system, e.d, &e.k, e.eta, e.n)
}

/// Multiples of `n` nearest to `x`, both of them on an exact tie.
fn nearest_multiples(x: &Real, n: u64) -> Vec<u64> {
    let q = x.div(&Real::int(n as i64));
    let lo = q.floor_guarded(0.0).unwrap_or(q.to_f64().floor() as i64);
    let frac = q.sub(&Real::int(lo));
    let half = Real::ratio(1, 2);
    let tie = match frac.cmp_real(&half) {
        Some(o) if frac.is_exact() => o == std::cmp::Ordering::Equal,
        _ => (frac.to_f64() - 0.5).abs() < 1e-12,
    };
    let pick = |j: i64| if j >= 1 { Some(j as u64 * n) } else { None };
    let mut out = Vec::new();
    if tie {
        out.extend(pick(lo));
        out.extend(pick(lo + 1));
    } else if frac.to_f64() < 0.5 {
        out.extend(pick(lo));
    } else {
        out.extend(pick(lo + 1));
    }
    out
}

fn events_at(system: &OrbitSystem, d: i64, eta: f64, n: u64) -> Result<Vec<CijtEvent>> {
    let mut choices: Vec<Vec<u64>> = Vec::with_capacity(system.orbits.len());
    for (i, o) in system.orbits.iter().enumerate() {
        let ks: Vec<u64> = nearest_multiples(&Real::int(d).div(&o.mean()), n)
            .into_iter()
            .filter(|&k| deviation(system, i, k, d).to_f64().abs() < eta)
            .collect();
        if ks.is_empty() {
            return Ok(Vec::new());
        }
        choices.push(ks);
    }
    let mut combos: Vec<Vec<u64>> = vec![Vec::new()];
    for c in &choices {
        combos = combos.into_iter().flat_map(|pre| c.iter().map(move |&k| [pre.clone(), vec![k]].concat())).collect();
    }
    let mut out = Vec::new();
    for k in combos {
        let checks = verify_clauses(system, d, &k, eta, n)?;
        if checks.passed() {
            out.push(CijtEvent { d, k, eta, n, checks });
        }
    }
    Ok(out)
}

/// Verified events with `d <= d_max`, sorted by `d`.
pub fn find_events_with(exec: Exec, system: &OrbitSystem, eta: f64, d_max: i64) -> Result<Vec<CijtEvent>> {
    if !(eta > 0.0) {
        return Err(Error::Parameter(format!("eta must be positive, got {eta}")));
    }
    if let Some(o) = system.orbits.iter().find(|o| o.mean().to_f64() <= 0.0) {
        return Err(Error::Parameter(format!("orbit {} has non-positive mean index", o.label)));
    }
    let n = compute_n(system)?.n;
    let top = if d_max > 0 { d_max as u64 / n } else { 0 };
    let per_d = par::map_range(exec, 1, top + 1, |j| events_at(system, (j * n) as i64, eta, n));
    let mut out = Vec::new();
    for r in per_d {
        out.extend(r?);
    }
    Ok(out)
}

pub fn find_events(system: &OrbitSystem, eta: f64, d_max: i64) -> Result<Vec<CijtEvent>> {
    find_events_with(Exec::default(), system, eta, d_max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaEntry {
    pub orbit: usize,
    pub k: u64,
    pub mu_minus: i64,
    pub mu_plus: i64,
    /// Point degree of a visible non-degenerate iterate.
    pub degree: Option<i64>,
    pub visible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaClassification {
    pub interval: (i64, i64),
    pub gamma_plus: Vec<GammaEntry>,
    pub gamma_zero: Vec<GammaEntry>,
    pub gamma_minus: Vec<GammaEntry>,
}

/// Sort iterates near an event into `Gamma-` (before `k_i`), `Gamma0` (at
/// `k_i`) and `Gamma+` (after), asserting the degree bounds of each.
pub fn classify_iterates(system: &OrbitSystem, e: &CijtEvent, k_window: u64) -> Result<GammaClassification> {
    let n = system.n as i64;
    let d = e.d;
    let interval = (d - n + 1, d + n - 1);
    let mut g = GammaClassification { interval, gamma_plus: vec![], gamma_zero: vec![], gamma_minus: vec![] };
    for (i, (&ki, o)) in e.k.iter().zip(&system.orbits).enumerate() {
        for k in ki.saturating_sub(k_window).max(1)..=ki + k_window {
            let v = euler_visibility(o, k)?;
            let (lo, hi) = match v.degree {
                Degree::Point(x) => (x, x),
                Degree::Interval(a, b) => (a, b),
            };
            let degree = match v.degree {
                Degree::Point(x) if v.visible => Some(x),
                _ => None,
            };
            let entry = GammaEntry { orbit: i, k, mu_minus: lo, mu_plus: hi, degree, visible: v.visible };
            let label = format!("{}^{k}", o.label);
            if k > ki {
                if lo < d + n + 1 {
                    return Err(Error::Consistency(format!("{label} in Gamma+ has mu- = {lo} < d+n+1")));
                }
                g.gamma_plus.push(entry);
            } else if k == ki {
                if lo < interval.0 || hi > interval.1 {
                    return Err(Error::Consistency(format!("{label} in Gamma0 has [{lo}, {hi}] outside the interval")));
                }
                g.gamma_zero.push(entry);
            } else {
                if hi > d - n - 1 {
                    return Err(Error::Consistency(format!("{label} in Gamma- has degree bound {hi} > d-n-1")));
                }
                g.gamma_minus.push(entry);
            }
        }
    }
    Ok(g)
}

/// Whether the strict ordering of deviations is fully reversed between two events.
fn reversed(a: &[f64], b: &[f64]) -> bool {
    let r = a.len();
    if r < 2 {
        return false;
    }
    for i in 0..r {
        for j in i + 1..r {
            let x = a[i] - a[j];
            let y = b[i] - b[j];
            if x == 0.0 || y == 0.0 || x.signum() == y.signum() {
                return false;
            }
        }
    }
    true
}

/// Every pair of events (by increasing `d`, then `d'`) whose mean-index order is reversed.
pub fn interchange_pairs(events: &[CijtEvent]) -> Vec<(CijtEvent, CijtEvent)> {
    let mut out = Vec::new();
    for (i, a) in events.iter().enumerate() {
        for b in &events[i + 1..] {
            if b.d > a.d && reversed(&a.deviations(), &b.deviations()) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// The first interchange pair within `d_max`.
pub fn find_interchange_events(
    system: &OrbitSystem,
    eta: f64,
    d_max: i64,
) -> Result<Option<(CijtEvent, CijtEvent)>> {
    if system.orbits.len() < 2 {
        return Ok(None);
    }
    let events = find_events(system, eta, d_max)?;
    Ok(interchange_pairs(&events).into_iter().next())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::e2_fixture;

    #[test]
    fn n_for_e2() {
        let nd = compute_n(&e2_fixture()).unwrap();
        assert_eq!((nd.n, nd.p, nd.s.clone()), (2, 1, vec![0]));
    }

    #[test]
    fn event_280() {
        let s = e2_fixture();
        let c = verify_clauses(&s, 280, &[82, 58], 0.125, 2).unwrap();
        assert!(c.passed(), "{:?}", c.failures);
        let bad = verify_clauses(&s, 280, &[82, 57], 0.125, 2).unwrap();
        assert!(bad.failures.contains(&"divisibility".to_string()));
        assert!(!bad.paths[1].ir1);
    }

    #[test]
    fn ties_take_both() {
        assert_eq!(nearest_multiples(&Real::int(5), 2), vec![4, 6]);
        assert_eq!(nearest_multiples(&Real::ratio(9, 2), 2), vec![4]);
    }

    #[test]
    fn e2_search() {
        let s = e2_fixture();
        let ev = find_events(&s, 0.125, 10_000).unwrap();
        assert_eq!((ev[0].d, ev[0].k.clone()), (116, vec![34, 24]));
        assert_eq!(ev.len(), 65);
        let seq = find_events_with(Exec::Sequential, &s, 0.125, 10_000).unwrap();
        assert_eq!(ev, seq);
        let single = find_events(&s.subsystem(&[0]).unwrap(), 0.125, 10_000).unwrap();
        assert_eq!((single[0].d, single[0].k.clone()), (82, vec![24]));
        assert_eq!(single.len(), 183);
        let (a, b) = find_interchange_events(&s, 0.125, 10_000).unwrap().unwrap();
        assert_eq!((a.d, b.d), (116, 280));
        for e in [&a, &b] {
            let g = classify_iterates(&s, e, 5).unwrap();
            assert_eq!(g.gamma_zero.len(), 2);
        }
    }
}
