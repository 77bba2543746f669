//! Irrational-ellipticity certificates for the extremal orbits of a
//! dynamically convex system, built from a pair of interchange events.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::cijt::{compute_n, find_events, interchange_pairs, CijtEvent};
use crate::error::{Error, Result};
use crate::exact::Real;
use crate::orbits::{deg_iterate, OrbitSystem, PrimeOrbitSpec};
use crate::path::{Atom, Segment, SymplecticPath};
use crate::sp_core::{
    angle_rationality, make_normal_form, nullity_omega, spectral_data, BasicNormalForm, NormalFormDecomposition,
    Rationality, SymplecticMatrix,
};
use crate::splitting::splitting_table;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    IrrationallyElliptic,
    Rejected,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventUse {
    pub d: i64,
    pub k: u64,
    pub mu_minus: i64,
    pub mu_plus: i64,
    /// `d - n + 1` at the low event, `d + n - 1` at the high one.
    pub expected_degree: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step1 {
    pub low: EventUse,
    pub high: EventUse,
    pub admissible: bool,
    /// `deg = mu+` at both events.
    pub degree_matches: bool,
    /// Both degrees sit on their expected extremal slots.
    pub slots_match: bool,
    /// A degenerate iterate made the concentration rule load-bearing.
    pub concentration_rule: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2 {
    pub nullity: usize,
    pub n: u64,
    pub n_divides_k: bool,
    /// Divisibility argument: `N | k` and `nu(y^k) = 0` leave no root of unity.
    pub logic_pass: bool,
    /// Roots of unity found by scanning the endpoint spectrum.
    pub roots_found: Vec<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleContribution {
    pub turns: f64,
    pub jump: i64,
    pub s_plus: u32,
    pub s_minus: u32,
    pub contribution: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step3 {
    pub k: u64,
    pub value: i64,
    pub target: i64,
    pub contributions: Vec<AngleContribution>,
    /// `mu-(k+1) - mu-(k) - mu-(1)` from the iteration formula.
    pub formula_value: Option<i64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step4 {
    /// Radians in `(0, 2pi)`, ascending.
    pub angles: Vec<f64>,
    pub witnesses: Vec<String>,
    pub irrational: bool,
    /// No eigenvalue carries both Krein signs, so no `{theta, 2pi - theta}` pair.
    pub claim1: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub label: String,
    pub orbit: usize,
    pub verdict: Verdict,
    /// First failing step (1-4) of a rejection.
    pub failed_step: Option<u8>,
    pub reason: Option<String>,
    /// `(d, d')` with `d < d'`.
    pub events: Option<(i64, i64)>,
    pub step1: Option<Step1>,
    pub step2: Option<Step2>,
    pub step3: Option<Step3>,
    pub step4: Option<Step4>,
}

impl Certificate {
    fn empty(system: &OrbitSystem, orbit: usize) -> Certificate {
        Certificate {
            label: system.orbits[orbit].label.clone(),
            orbit,
            verdict: Verdict::Inconclusive,
            failed_step: None,
            reason: None,
            events: None,
            step1: None,
            step2: None,
            step3: None,
            step4: None,
        }
    }

    fn reject(mut self, step: u8, reason: impl Into<String>) -> Certificate {
        self.verdict = Verdict::Rejected;
        self.failed_step = Some(step);
        self.reason = Some(reason.into());
        self
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::IrrationallyElliptic
    }
}

/// The Step 3 identity evaluated on an endpoint decomposition.
pub fn step3_sum(decomp: &NormalFormDecomposition, k: u64, n: usize) -> Result<Step3> {
    let table = splitting_table(decomp);
    let mut value = 0;
    let mut contributions = Vec::new();
    for e in table.circle() {
        let t = e.turns.fract();
        let half = Real::ratio(1, 2);
        if !t.lt(&half) || t.signum() <= 0 || !angle_rationality(&t, tol::q_max()).is_irrational() {
            continue;
        }
        let ceil = |j: u64| {
            let x = t.mul(&Real::int(j as i64));
            x.ceil_guarded(tol::CEIL_GUARD)
                .ok_or(Error::ResonantCeiling { value: x.to_f64(), guard: tol::CEIL_GUARD })
        };
        let jump = ceil(k + 1)? - ceil(k)?;
        let contribution = (2 * jump - 1) * (e.s_minus as i64 - e.s_plus as i64);
        value += contribution;
        contributions.push(AngleContribution {
            turns: t.to_f64(),
            jump,
            s_plus: e.s_plus,
            s_minus: e.s_minus,
            contribution,
        });
    }
    let target = n as i64 - 1;
    Ok(Step3 { k, value, target, contributions, formula_value: None, pass: value == target })
}

/// Rotation angles of an elliptic matrix with semisimple unit spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationDecomposition {
    pub angles: Vec<f64>,
    /// `(angle in (0, pi), krein_pos, krein_neg)` per cluster in the upper half-plane.
    pub clusters: Vec<(f64, usize, usize)>,
}

impl RotationDecomposition {
    pub fn claim1(&self) -> bool {
        self.clusters.iter().all(|&(_, p, q)| p == 0 || q == 0)
    }
}

/// Angles `theta_i` with `m` conjugate to the ⋄-sum of `R(theta_i)`; an
/// eigenvalue `e^{i theta}` contributes `theta` per Krein-positive direction
/// and `2pi - theta` per Krein-negative one.
pub fn rotation_decomposition(m: &SymplecticMatrix) -> Result<RotationDecomposition> {
    let spec = spectral_data(m)?;
    let mut angles = Vec::with_capacity(m.half_dim());
    let mut clusters = Vec::new();
    for c in &spec.clusters {
        if !c.on_circle {
            return Err(Error::Verification(format!("eigenvalue {} is off the unit circle", c.value)));
        }
        if c.is_real() {
            return Err(Error::Verification(format!("eigenvalue {} is real", c.value.re)));
        }
        if c.value.im < 0.0 {
            continue;
        }
        if nullity_omega(m, c.value) != c.multiplicity {
            return Err(Error::Verification(format!(
                "not conjugate to rotations: eigenvalue at angle {:.6} is not semisimple",
                c.angle()
            )));
        }
        let theta = c.angle();
        angles.extend(std::iter::repeat(theta).take(c.krein_pos));
        angles.extend(std::iter::repeat(TAU - theta).take(c.krein_neg));
        clusters.push((theta, c.krein_pos, c.krein_neg));
    }
    angles.sort_by(f64::total_cmp);
    Ok(RotationDecomposition { angles, clusters })
}

/// Irrationality witness for an angle, preferring exact block data.
fn witness(angle: f64, decomp: &NormalFormDecomposition) -> (bool, String) {
    let turns = angle / TAU;
    let exact = decomp.blocks.iter().filter_map(BasicNormalForm::unit_turns).find_map(|t| {
        let f = t.fract();
        let x = f.to_f64();
        if (x - turns).abs() < 1e-6 {
            Some(f)
        } else if (1.0 - x - turns).abs() < 1e-6 {
            Some(Real::int(1).sub(&f))
        } else {
            None
        }
    });
    let t = exact.unwrap_or(Real::Float(turns));
    match angle_rationality(&t, tol::q_max()) {
        Rationality::Irrational => (true, format!("theta/2pi = {} is an exact quadratic irrational", t.to_token())),
        Rationality::BeyondBound { bound } => {
            (true, format!("theta/2pi = {:.16e} has no convergent with denominator <= {bound}", t.to_f64()))
        }
        Rationality::Rational { p, q } => (false, format!("theta/2pi = {p}/{q} is rational")),
    }
}

fn direct_roots(decomp: &NormalFormDecomposition) -> Vec<String> {
    let mut out = Vec::new();
    for b in &decomp.blocks {
        let Some(t) = b.unit_turns() else { continue };
        if let Rationality::Rational { p, q } = angle_rationality(&t, tol::q_max()) {
            out.push(format!("{}: e^(2pi i {p}/{q})", b.label()));
        }
    }
    for z in decomp.rest_eigenvalues() {
        if (z.norm() - 1.0).abs() < tol::UNIT_CIRCLE {
            let t = Real::Float(z.arg().rem_euclid(TAU) / TAU);
            if let Rationality::Rational { p, q } = angle_rationality(&t, tol::q_max()) {
                out.push(format!("rest: e^(2pi i {p}/{q})"));
            }
        }
    }
    out
}

fn event_use(o: &PrimeOrbitSpec, e: &CijtEvent, i: usize, expected: i64) -> Result<EventUse> {
    let k = e.k[i];
    Ok(EventUse { d: e.d, k, mu_minus: o.mu_minus(k)?, mu_plus: o.mu_plus(k)?, expected_degree: expected })
}

/// Position of orbit `i` in the deviation order of an event: `Some(-1)` lowest, `Some(1)` highest.
fn rank(e: &CijtEvent, i: usize) -> Option<i8> {
    let dev = e.deviations();
    let x = dev[i];
    if dev.iter().enumerate().all(|(j, &y)| j == i || x < y) {
        Some(-1)
    } else if dev.iter().enumerate().all(|(j, &y)| j == i || x > y) {
        Some(1)
    } else {
        None
    }
}

/// Certify orbit `i` from a low event (where it sits lowest) and a high event.
fn certify_orbit(system: &OrbitSystem, i: usize, low: &CijtEvent, high: &CijtEvent, n_val: u64) -> Result<Certificate> {
    let o = &system.orbits[i];
    let n = system.n as i64;
    let mut cert = Certificate::empty(system, i);
    cert.events = Some((low.d.min(high.d), low.d.max(high.d)));

    let lo = event_use(o, low, i, low.d - n + 1)?;
    let hi = event_use(o, high, i, high.d + n - 1)?;
    let admissible = o.classify(lo.k).admissible && o.classify(hi.k).admissible;
    let concentration_rule = o.nullity(lo.k)? > 0 || o.nullity(hi.k)? > 0 || o.nullity(1)? > 0;
    let degree_matches = admissible && {
        let base = o.mu_plus(1)?;
        deg_iterate(o, base, lo.k)? == lo.mu_plus && deg_iterate(o, base, hi.k)? == hi.mu_plus
    };
    // |mu-hat - d| < 1/2 confines mu+ to [d - n + 1, d + n - 1].
    let in_window = [&lo, &hi].iter().all(|u| u.mu_plus >= u.d - n + 1 && u.mu_plus <= u.d + n - 1);
    let slots_match = lo.mu_plus == lo.expected_degree && hi.mu_plus == hi.expected_degree;
    let pass = admissible && degree_matches && in_window;
    let (k_low, low_deg) = (lo.k, lo.mu_plus);
    cert.step1 = Some(Step1 { low: lo, high: hi, admissible, degree_matches, slots_match, concentration_rule, pass });
    if !pass {
        let why = if !admissible {
            "an event iterate is not admissible"
        } else if !degree_matches {
            "deg differs from mu+ at an event"
        } else {
            "mu+ escapes the event window"
        };
        return Ok(cert.reject(1, why));
    }

    let nullity = o.nullity(k_low)?;
    let n_divides_k = k_low % n_val == 0;
    let logic_pass = n_divides_k && nullity == 0 && o.mu_minus(k_low)? == low_deg;
    let decomp = &o.report().endpoint;
    let roots_found = direct_roots(decomp);
    if logic_pass && !roots_found.is_empty() {
        return Err(Error::Consistency(format!(
            "{}: divisibility argument rules out roots of unity but the scan found {}",
            o.label,
            roots_found.join(", ")
        )));
    }
    let pass = logic_pass && roots_found.is_empty();
    cert.step2 = Some(Step2 { nullity, n: n_val, n_divides_k, logic_pass, roots_found, pass });
    if !pass {
        return Ok(cert.reject(2, format!("y^{k_low} is degenerate or the endpoint has a root of unity")));
    }

    let mut s3 = step3_sum(decomp, k_low, system.n)?;
    let formula = o.mu_minus(k_low + 1)? - o.mu_minus(k_low)? - o.mu_minus(1)?;
    s3.formula_value = Some(formula);
    let all_irrational = o.report().table.circle().all(|e| angle_rationality(&e.turns, tol::q_max()).is_irrational());
    if all_irrational && formula != s3.value {
        return Err(Error::Consistency(format!(
            "{}: Step 3 sum {} disagrees with the iteration formula {formula}",
            o.label, s3.value
        )));
    }
    let (value, target, pass) = (s3.value, s3.target, s3.pass);
    cert.step3 = Some(s3);
    if !pass {
        return Ok(cert.reject(3, format!("sum identity gives {value}, needs {target}")));
    }

    let rd = match rotation_decomposition(&o.path.endpoint()) {
        Ok(rd) => rd,
        Err(e) if e.is_verification() => return Ok(cert.reject(4, e.to_string())),
        Err(e) => return Err(e),
    };
    let (irr, witnesses): (Vec<bool>, Vec<String>) = rd.angles.iter().map(|&a| witness(a, decomp)).unzip();
    let irrational = irr.iter().all(|&b| b) && rd.angles.len() == system.n - 1;
    let claim1 = rd.claim1();
    let pass = irrational && claim1;
    cert.step4 = Some(Step4 { angles: rd.angles, witnesses, irrational, claim1, pass });
    if !pass {
        return Ok(cert.reject(4, if claim1 { "an angle is a rational multiple of pi" } else { "theta and 2pi - theta both appear" }));
    }
    if concentration_rule {
        cert.reason = Some("degenerate iterate: concentration rule is load-bearing".into());
        return Ok(cert);
    }
    cert.verdict = Verdict::IrrationallyElliptic;
    Ok(cert)
}

/// One certificate per orbit. Orbits that are not extremal in any
/// interchange pair within `d_max` come back inconclusive.
pub fn certify_system(system: &OrbitSystem, eta: f64, d_max: i64) -> Result<Vec<Certificate>> {
    if system.orbits.len() != system.n {
        return Err(Error::Parameter(format!(
            "certification needs exactly n = {} prime orbits, got {}",
            system.n,
            system.orbits.len()
        )));
    }
    if let Some(o) = system.orbits.iter().find(|o| !o.report().dyn_convex) {
        return Err(Error::Parameter(format!("orbit {} is not dynamically convex", o.label)));
    }
    if !(eta < 0.5) {
        return Err(Error::Parameter(format!("eta must be below 1/2, got {eta}")));
    }
    let n_val = compute_n(system)?.n;
    let pairs = interchange_pairs(&find_events(system, eta, d_max)?);
    let mut out = Vec::with_capacity(system.orbits.len());
    for i in 0..system.orbits.len() {
        let found = pairs.iter().find_map(|(a, b)| match (rank(a, i), rank(b, i)) {
            (Some(-1), Some(1)) => Some((a, b)),
            (Some(1), Some(-1)) => Some((b, a)),
            _ => None,
        });
        let cert = match found {
            Some((low, high)) => certify_orbit(system, i, low, high, n_val)?,
            None => {
                let mut c = Certificate::empty(system, i);
                c.reason = Some(if pairs.is_empty() {
                    format!("no interchange events with d <= {d_max}")
                } else {
                    "orbit is not extremal in any interchange pair".into()
                });
                c
            }
        };
        out.push(cert);
    }
    Ok(out)
}

/// Re-run certification from the raw paths and compare verdicts.
pub fn verify_certificate(system: &OrbitSystem, cert: &Certificate, eta: f64, d_max: i64) -> Result<bool> {
    let fresh: Vec<PrimeOrbitSpec> = system
        .orbits
        .iter()
        .map(|o| PrimeOrbitSpec::new(o.label.clone(), o.action, o.path.clone()))
        .collect::<Result<_>>()?;
    let rebuilt = OrbitSystem::new(system.n, fresh)?;
    let again = certify_system(&rebuilt, eta, d_max)?;
    Ok(again.get(cert.orbit).is_some_and(|c| c.verdict == cert.verdict && c.failed_step == cert.failed_step))
}

/// A single-block change to one orbit of an ellipsoid-shaped system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mutation {
    /// `D(lambda)` in the given slot.
    Hyperbolic { lambda: f64, slot: usize },
    /// `N1(1, a)` in the given slot.
    Shear { a: i8, slot: usize },
    /// A trivial `N2` block across the first two slots at the given angle (in turns).
    TrivialN2 { turns: f64 },
}

impl Mutation {
    /// Step at which a certificate of the mutated orbit must fail.
    pub fn expected_step(&self) -> u8 {
        match self {
            Mutation::Shear { .. } => 2,
            _ => 3,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Mutation::Hyperbolic { lambda, slot } => format!("D({lambda}) in slot {slot}"),
            Mutation::Shear { a, slot } => format!("N1(1,{a}) in slot {slot}"),
            Mutation::TrivialN2 { turns } => format!("trivial N2 at {turns} turns"),
        }
    }
}

/// Replace one block of orbit `orbit`'s path. The mutated slots get `loops`
/// full turns in a second segment so the orbit stays dynamically convex.
pub fn mutate(system: &OrbitSystem, orbit: usize, mutation: Mutation, loops: u32) -> Result<OrbitSystem> {
    let o = system.orbits.get(orbit).ok_or_else(|| Error::Parameter(format!("no orbit {orbit}")))?;
    let m = o.half_dim();
    let segs = o
        .path
        .segments()
        .filter(|s| s.len() == 2 && s.iter().all(|g| g.atoms.len() == m))
        .ok_or_else(|| Error::Parameter("mutations need a two-segment slot-aligned path".into()))?;
    let mut first = segs[0].atoms.clone();
    let mut second = segs[1].atoms.clone();
    let lp = |extra: Real| Atom::rotation(Real::int(loops as i64).add(&extra));
    if let Mutation::Hyperbolic { slot, .. } | Mutation::Shear { slot, .. } = mutation {
        if slot >= m {
            return Err(Error::Parameter(format!("slot {slot} out of range for {m} slots")));
        }
    }
    let path = match mutation {
        Mutation::Hyperbolic { lambda, slot } => {
            if lambda == 0.0 || (lambda.abs() - 1.0).abs() < tol::UNIT_CIRCLE {
                return Err(Error::Parameter(format!("D(lambda) needs |lambda| != 1, got {lambda}")));
            }
            first[slot] = Atom::Hyperbolic { rate: lambda.abs().ln() };
            second[slot] = lp(if lambda < 0.0 { Real::ratio(1, 2) } else { Real::zero() });
            SymplecticPath::symbolic(vec![Segment::new(first), Segment::new(second)])?
        }
        Mutation::Shear { a, slot } => {
            if a.abs() != 1 {
                return Err(Error::Parameter(format!("N1(1,a) mutation needs a = +-1, got {a}")));
            }
            first[slot] = Atom::Shear { a: a as f64 };
            second[slot] = lp(Real::zero());
            SymplecticPath::symbolic(vec![Segment::new(first), Segment::new(second)])?
        }
        Mutation::TrivialN2 { turns } => {
            if m != 2 {
                return Err(Error::Parameter("trivial N2 mutation needs a 4-dimensional path".into()));
            }
            let n2 = make_normal_form(&BasicNormalForm::n2_canonical(Real::Float(turns), true))?;
            // Keep the rotations, then steer from their endpoint to the N2 block.
            // The Jordan block only appears at the very end of the path.
            let extra = Real::int(loops as i64);
            let second: Vec<Atom> = second
                .iter()
                .map(|a| match a {
                    Atom::Rotation { turns } => Atom::rotation(turns.add(&extra)),
                    other => other.clone(),
                })
                .collect();
            let head = SymplecticPath::symbolic(vec![Segment::new(first), Segment::new(second)])?;
            let fix = n2.compose(&head.endpoint().inverse());
            let mut segs = head.segments().expect("symbolic").to_vec();
            segs.push(Segment::new(vec![Atom::generic(fix)?]));
            SymplecticPath::symbolic(segs)?
        }
    };
    let mut orbits = system.orbits.clone();
    orbits[orbit] = PrimeOrbitSpec::new(o.label.clone(), o.action, path)?;
    OrbitSystem::new(system.n, orbits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{j_matrix, Mat};
    use crate::orbits::e2_fixture;
    use crate::sp_core::diamond;

    fn rot(turns: f64) -> SymplecticMatrix {
        make_normal_form(&BasicNormalForm::R { turns: Real::Float(turns) }).unwrap()
    }

    #[test]
    fn rotations_recovered() {
        let m = diamond(&rot(0.2), &rot(0.7));
        let rd = rotation_decomposition(&m).unwrap();
        assert!((rd.angles[0] - TAU * 0.2).abs() < 1e-8 && (rd.angles[1] - TAU * 0.7).abs() < 1e-8);
        assert!(rd.claim1());
        let s = Mat::from_row_slice(4, 4, &[0.3, 0.1, 0.0, 0.2, 0.1, -0.2, 0.4, 0.0, 0.0, 0.4, 0.5, 0.1, 0.2, 0.0, 0.1, 0.1]);
        let q = SymplecticMatrix::new((j_matrix(4) * s).exp()).unwrap();
        let rq = rotation_decomposition(&m.conjugate_by(&q)).unwrap();
        for (a, b) in rd.angles.iter().zip(&rq.angles) {
            assert!((a - b).abs() < 1e-8);
        }
        let mixed = rotation_decomposition(&diamond(&rot(0.2), &rot(0.8))).unwrap();
        assert!(!mixed.claim1());
    }

    #[test]
    fn jordan_blocks_refused() {
        let n2 = make_normal_form(&BasicNormalForm::n2_canonical(Real::Float(0.3), false)).unwrap();
        let e = rotation_decomposition(&n2).unwrap_err();
        assert!(e.to_string().contains("not conjugate to rotations"));
    }

    #[test]
    fn step3_examples() {
        let d = NormalFormDecomposition::join(&[
            NormalFormDecomposition { blocks: vec![BasicNormalForm::rotation(Real::Exact(crate::exact::Surd::sqrt(2)))], rest: SymplecticMatrix::identity(0) },
        ]);
        let s = step3_sum(&d, 82, 2).unwrap();
        assert_eq!((s.value, s.pass), (1, true));
        let trivial = NormalFormDecomposition {
            blocks: vec![BasicNormalForm::n2_canonical(Real::Exact(crate::exact::Surd::sqrt(2)), true)],
            rest: SymplecticMatrix::identity(0),
        };
        assert_eq!(step3_sum(&trivial, 82, 3).unwrap().value, 0);
    }

    #[test]
    fn e2_certified() {
        let s = e2_fixture();
        let certs = certify_system(&s, 0.125, 2000).unwrap();
        for c in &certs {
            assert!(c.is_certified(), "{c:?}");
            assert!(verify_certificate(&s, c, 0.125, 2000).unwrap());
        }
        let a0 = certs[0].step4.as_ref().unwrap().angles[0];
        assert!((a0 - (TAU / 2f64.sqrt()).rem_euclid(TAU)).abs() < 1e-9);
        let a1 = certs[1].step4.as_ref().unwrap().angles[0];
        assert!((a1 - (TAU * 2f64.sqrt()).rem_euclid(TAU)).abs() < 1e-9);
    }
}
