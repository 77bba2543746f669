//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line to
//! stderr (bypassing the harness capture) and the test fails if any does.

mod common;

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{degenerate_path, random_path, report, worst_residual, ALL_KINDS, EXACT_KINDS};
use maslov::certify::{certify_system, mutate, Mutation, Verdict};
use maslov::cijt::{find_events, interchange_pairs, CijtEvent};
use maslov::iteration::{bott_nullity, direct_nullity, iterate_mu_minus, mean_identity_residual};
use maslov::orbits::{action_ratio, deg_iterate, degree_table, e2_fixture, e3_fixture, ellipsoid_system, OrbitSystem};
use maslov::path::{perturbation_oracle, power_path, Atom, SymplecticPath};
use maslov::sp_core::{make_normal_form, nullity_omega, BasicNormalForm, NormalFormDecomposition, SymplecticMatrix};
use maslov::splitting::{splitting_numbers, splitting_oracle};
use maslov::{Real, Surd};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Index of `exp(2 pi i lambda t)` is `sign(lambda)(2 floor|lambda| + 1)`.
fn rotation_index() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut n = 0;
    while n < 200 {
        let lambda: f64 = rng.gen_range(-10.0..10.0);
        if (lambda - lambda.round()).abs() < 1e-6 {
            continue;
        }
        let r = report(&SymplecticPath::rotation(Real::Float(lambda))).map_err(err)?;
        let expect = lambda.signum() as i64 * (2 * lambda.abs().floor() as i64 + 1);
        ensure!(r.lower == expect && r.upper == expect, "lambda {lambda}: got ({}, {}), want {expect}", r.lower, r.upper);
        n += 1;
    }
    Ok(format!("{n} values of lambda"))
}

fn single(b: &BasicNormalForm) -> NormalFormDecomposition {
    NormalFormDecomposition { blocks: vec![b.clone()], rest: SymplecticMatrix::identity(0) }
}

fn endpoint_path(b: &BasicNormalForm) -> Result<SymplecticPath, String> {
    let m = make_normal_form(b).map_err(err)?;
    SymplecticPath::from_atoms(vec![Atom::generic(m).map_err(err)?]).map_err(err)
}

/// Table lookup and oracle at `e^{i theta}` both equal `want`.
fn probe(b: &BasicNormalForm, theta: f64, want: (u32, u32), oracle: bool) -> Result<(), String> {
    let w = Complex64::from_polar(1.0, theta);
    let got = splitting_numbers(&single(b), w).map_err(err)?;
    ensure!(got == want, "{} at {theta}: table gives {got:?}, want {want:?}", b.label());
    if oracle {
        let o = splitting_oracle(&endpoint_path(b)?, theta).map_err(err)?;
        ensure!(o == want, "{} at {theta}: oracle gives {o:?}, want {want:?}", b.label());
    }
    Ok(())
}

/// The four rows of the basic-normal-form splitting table.
fn splitting_rows() -> Outcome {
    let mut probes = 0;
    for a in [-1i8, 0, 1] {
        let b = BasicNormalForm::N1 { lambda: 1, a };
        probe(&b, 0.0, if a >= 0 { (1, 1) } else { (0, 0) }, false)?;
        let b = BasicNormalForm::N1 { lambda: -1, a };
        probe(&b, PI, if a <= 0 { (1, 1) } else { (0, 0) }, true)?;
        probes += 2;
    }
    for j in 1..=50 {
        let b = BasicNormalForm::R { turns: Real::ratio(j, 53) };
        let theta = TAU * j as f64 / 53.0;
        probe(&b, theta, (0, 1), true)?;
        probe(&b, TAU - theta, (1, 0), true)?;
        probe(&b, theta + 0.3, (0, 0), true)?;
        probes += 3;
    }
    for (p, q) in [(1, 5), (2, 7), (3, 8), (5, 7), (4, 5), (1, 3), (5, 12)] {
        for trivial in [true, false] {
            let b = BasicNormalForm::n2_canonical(Real::ratio(p, q), trivial);
            let want = if trivial { (0, 0) } else { (1, 1) };
            let theta = TAU * p as f64 / q as f64;
            probe(&b, theta, want, true)?;
            probe(&b, TAU - theta, want, true)?;
            probes += 2;
        }
    }
    Ok(format!("{probes} probes"))
}

/// Iteration formula against the index of the iterated path.
fn iteration_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checks = 0;
    for i in 0..100 {
        let p = random_path(&mut rng, &EXACT_KINDS);
        let r = report(&p).map_err(err)?;
        for k in 1..=50u64 {
            let formula = iterate_mu_minus(r.lower, &r.table, k).map_err(|e| format!("path {i}, k {k}: {e}"))?;
            let direct = report(&power_path(&p, k).map_err(err)?).map_err(|e| format!("path {i}, k {k}: {e}"))?;
            ensure!(formula == direct.lower, "path {i}, k {k}: formula {formula}, direct {}", direct.lower);
            checks += 1;
        }
    }
    Ok(format!("{checks} (path, k) pairs"))
}

/// Bott-type nullity formula on rational rotations and shears.
fn bott_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checks = 0;
    for i in 0..60 {
        let m = common::resonant_matrix(&mut rng);
        for k in 1..=30u64 {
            let direct = direct_nullity(&m, k);
            let roots: usize =
                (0..k).map(|j| nullity_omega(&m, Complex64::from_polar(1.0, TAU * j as f64 / k as f64))).sum();
            let bott = bott_nullity(&m, k).map_err(err)?;
            ensure!(
                direct == roots && roots == bott,
                "matrix {i}, k {k}: kernel {direct}, root sum {roots}, table {bott}"
            );
            checks += 1;
        }
    }
    Ok(format!("{checks} (matrix, k) pairs"))
}

/// Index invariants on random paths.
fn invariant_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let p = random_path(&mut rng, &ALL_KINDS);
        let r = report(&p).map_err(|e| format!("path {i}: {e}"))?;
        let m = r.half_dim() as f64;
        let mean = r.mean.to_f64();
        ensure!(r.upper - r.lower == r.nullity as i64, "path {i}: mu+ - mu- != nu");
        ensure!(
            mean - m - 1e-9 <= r.lower as f64 && r.upper as f64 <= mean + m + 1e-9,
            "path {i}: indices ({}, {}) outside mean {mean} +- {m}",
            r.lower,
            r.upper
        );
        if r.nullity == 0 {
            let det = p.endpoint().det_id_minus();
            let parity = if (r.lower - r.half_dim() as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            ensure!(parity == det.signum(), "path {i}: parity {parity} against det {det}");
        }
        let turns: Vec<i64> = (0..r.half_dim()).map(|_| rng.gen_range(-2..=2)).collect();
        let lp = common::loop_path(r.half_dim(), &turns);
        let shift = 2 * maslov::path::maslov_loop_index(&lp).map_err(err)?;
        let rl = report(&p.concat(&lp).map_err(err)?).map_err(|e| format!("path {i} with loop: {e}"))?;
        ensure!(
            rl.lower == r.lower + shift && rl.upper == r.upper + shift,
            "path {i}: loop shift {shift} gave ({}, {}) from ({}, {})",
            rl.lower,
            rl.upper,
            r.lower,
            r.upper
        );
        let q = random_path(&mut rng, &ALL_KINDS);
        let rq = report(&q).map_err(err)?;
        let rs = report(&p.diamond(&q).map_err(err)?).map_err(|e| format!("path {i} diamond: {e}"))?;
        ensure!(
            rs.lower == r.lower + rq.lower && rs.upper == r.upper + rq.upper && rs.nullity == r.nullity + rq.nullity,
            "path {i}: diamond not additive"
        );
        ensure!((rs.mean.to_f64() - mean - rq.mean.to_f64()).abs() < 1e-8, "path {i}: diamond mean not additive");
        let k = rng.gen_range(2..=10u64);
        let rk = report(&power_path(&p, k).map_err(err)?).map_err(|e| format!("path {i}^{k}: {e}"))?;
        let drift = (rk.mean.to_f64() - k as f64 * mean).abs();
        ensure!(drift <= 1e-8, "path {i}: homogeneity drift {drift:e} at k {k}");
    }
    Ok("1000 paths".into())
}

fn degrees_of(s: &OrbitSystem, cutoff: i64) -> Result<Vec<i64>, String> {
    let t = degree_table(s, cutoff).map_err(err)?;
    ensure!(t.is_bijective(), "degree table not bijective: {:?}", t.problem);
    Ok(t.degrees.keys().copied().collect())
}

/// Ellipsoid degree bijection and action/mean ratio.
fn ellipsoid_degrees() -> Outcome {
    let e2 = degrees_of(&e2_fixture(), 101)?;
    ensure!(e2 == (3..=101).step_by(2).collect::<Vec<_>>(), "E2 degrees {e2:?}");
    let e3 = degrees_of(&e3_fixture(), 100)?;
    ensure!(e3 == (4..=100).step_by(2).collect::<Vec<_>>(), "E3 degrees {e3:?}");
    let phi = Surd::phi();
    let cases = [
        (e2_fixture(), vec![1.0, 2f64.sqrt()], e2.len()),
        (e3_fixture(), vec![1.0, phi.to_f64(), phi.to_f64().powi(2)], e3.len()),
    ];
    let mut worst: f64 = 0.0;
    for (s, r, count) in cases {
        let a = action_ratio(&s, count).map_err(err)?;
        let expect = PI / r.iter().map(|x| 1.0 / x).sum::<f64>();
        ensure!(a.max_deviation < 1e-10, "ratio drifts by {:e}", a.max_deviation);
        ensure!((a.ratio - expect).abs() < 1e-10, "ratio {} against {expect}", a.ratio);
        worst = worst.max(a.max_deviation).max((a.ratio - expect).abs());
    }
    Ok(format!("{} + {} degrees, ratio error {worst:.1e}", e2.len(), e3.len()))
}

fn has_event(events: &[CijtEvent], d: i64, k: &[u64]) -> bool {
    events.iter().any(|e| e.d == d && e.k == k)
}

/// Every check clause plus the convexity window, recomputed from the orbits.
fn event_sound(s: &OrbitSystem, e: &CijtEvent) -> Result<(), String> {
    ensure!(e.checks.passed(), "event {} failed {:?}", e.d, e.checks.failures);
    ensure!(e.checks.paths.iter().all(|p| p.ir1 && p.ir2 && p.ir3), "event {} has a failing path clause", e.d);
    let m = s.n as i64 - 1;
    for (o, &k) in s.orbits.iter().zip(&e.k) {
        for l in 1..=10u64 {
            let up = o.mu_minus(k + l).map_err(err)?;
            ensure!(up >= e.d + 2 + m, "event {}: mu-({}) = {up}", e.d, k + l);
            if k > l {
                let down = o.mu_plus(k - l).map_err(err)?;
                ensure!(down <= e.d - 2, "event {}: mu+({}) = {down}", e.d, k - l);
            }
        }
    }
    Ok(())
}

/// Common index jump events for the single orbit and the full pair.
fn cijt_events() -> Outcome {
    let full = e2_fixture();
    let one = full.subsystem(&[0]).map_err(err)?;
    let single = find_events(&one, 0.125, 10_000).map_err(err)?;
    let both = find_events(&full, 0.125, 10_000).map_err(err)?;
    ensure!(has_event(&single, 198, &[58]), "single-orbit event (198, 58) missing");
    ensure!(has_event(&both, 280, &[82, 58]), "event (280, (82, 58)) missing");
    for e in &single {
        event_sound(&one, e)?;
    }
    for e in &both {
        event_sound(&full, e)?;
    }
    Ok(format!("{} single-orbit and {} two-orbit events", single.len(), both.len()))
}

/// The interchange pair and its swapped degree diagrams.
fn interchange() -> Outcome {
    let s = e2_fixture();
    let events = find_events(&s, 0.125, 10_000).map_err(err)?;
    let pairs = interchange_pairs(&events);
    let (a, b) = pairs
        .iter()
        .find(|(a, b)| a.d == 280 && a.k == [82, 58] && b.d == 676 && b.k == [198, 140])
        .ok_or("pair (280, 676) not among the interchange pairs")?;
    let (da, db) = (a.deviations(), b.deviations());
    ensure!(
        (da[0] - da[1]).signum() == -(db[0] - db[1]).signum() && da[0] != da[1],
        "mean-index order not reversed: {da:?} vs {db:?}"
    );
    let diagram = |e: &CijtEvent| -> Result<Vec<i64>, String> {
        s.orbits
            .iter()
            .zip(&e.k)
            .map(|(o, &k)| deg_iterate(o, o.mu_plus(1).map_err(err)?, k).map_err(err))
            .collect()
    };
    let (ga, gb) = (diagram(a)?, diagram(b)?);
    ensure!(ga == [279, 281] && gb == [677, 675], "degree diagrams {ga:?} and {gb:?}");
    Ok(format!("{} interchange pairs, diagrams {ga:?} / {gb:?}", pairs.len()))
}

fn certified(s: &OrbitSystem, d_max: i64) -> Result<usize, String> {
    let certs = certify_system(s, 0.125, d_max).map_err(err)?;
    ensure!(!certs.iter().any(|c| c.verdict == Verdict::Rejected), "an unmutated orbit was rejected");
    Ok(certs.iter().filter(|c| c.is_certified()).count())
}

/// Certificates on the reference ellipsoids and rejection of mutations.
fn certification() -> Outcome {
    let c2 = certified(&e2_fixture(), 10_000)?;
    let c3 = certified(&e3_fixture(), 10_000)?;
    ensure!(c2 >= 2 && c3 >= 2, "certified {c2} on E2 and {c3} on E3");
    let mut cases: Vec<(OrbitSystem, usize, Mutation, u32, i64)> = Vec::new();
    for orbit in 0..2 {
        for m in [
            Mutation::Hyperbolic { lambda: 2.0, slot: 0 },
            Mutation::Hyperbolic { lambda: -2.0, slot: 0 },
            Mutation::Shear { a: 1, slot: 0 },
            Mutation::Shear { a: -1, slot: 0 },
        ] {
            for loops in [2, 3] {
                cases.push((e2_fixture(), orbit, m, loops, 10_000));
            }
        }
    }
    let sq = |d| Real::Exact(Surd::sqrt(d));
    let e123 = ellipsoid_system(&[Real::int(1), sq(2), sq(3)]).map_err(err)?;
    let e135 = ellipsoid_system(&[Real::int(1), sq(3), sq(5)]).map_err(err)?;
    let e125 = ellipsoid_system(&[Real::int(1), sq(2), sq(5)]).map_err(err)?;
    let n2 = Mutation::TrivialN2 { turns: 0.381966011250105 };
    for (s, orbit) in [(e123.clone(), 0), (e123, 2), (e135, 1), (e125, 1)] {
        cases.push((s, orbit, n2, 0, 1_000_000));
    }
    ensure!(cases.len() == 20, "{} mutations", cases.len());
    for (s, orbit, m, loops, d_max) in &cases {
        let ms = mutate(s, *orbit, *m, *loops).map_err(err)?;
        let certs = certify_system(&ms, 0.125, *d_max).map_err(err)?;
        let c = &certs[*orbit];
        ensure!(
            c.verdict == Verdict::Rejected && c.failed_step == Some(m.expected_step()),
            "{} on orbit {orbit} (loops {loops}): {:?} at step {:?}, want step {}",
            m.label(),
            c.verdict,
            c.failed_step,
            m.expected_step()
        );
    }
    Ok(format!("{c2} on E2, {c3} on E3, {} mutations rejected", cases.len()))
}

/// Perturbation oracle on degenerate endpoints and the mean identity everywhere.
fn oracle_cross_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..500 {
        let p = degenerate_path(&mut rng);
        let r = report(&p).map_err(|e| format!("path {i}: {e}"))?;
        ensure!(r.nullity > 0, "path {i} is not degenerate");
        let o = perturbation_oracle(&p).map_err(|e| format!("path {i}: {e}"))?;
        ensure!(o == (r.lower, r.upper), "path {i}: oracle {o:?}, report ({}, {})", r.lower, r.upper);
    }
    let mut worst = worst_residual();
    for s in [e2_fixture(), e3_fixture()] {
        for o in &s.orbits {
            worst = worst.max(mean_identity_residual(o.report()));
        }
    }
    ensure!(worst < 1e-6, "mean identity residual {worst:e}");
    Ok(format!("500 degenerate paths, worst residual {worst:.1e}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("rotation index formula", rotation_index, 1),
        ("splitting-number table", splitting_rows, 5),
        ("iteration formula vs iterated path", iteration_formula, 10),
        ("Bott nullity", bott_formula, 10),
        ("index invariants", invariant_suite, 30),
        ("ellipsoid degree bijection", ellipsoid_degrees, 2),
        ("common index jump events", cijt_events, 30),
        ("interchange events", interchange, 60),
        ("certification and mutations", certification, 120),
        ("oracle cross-check", oracle_cross_check, 30),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr().lock();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > Duration::from_secs(*budget) => {
                Err(format!("{detail}; over the {budget} s budget"))
            }
            other => other,
        };
        let line = match &result {
            Ok(detail) => format!("PASS {:>2} {name} ({:.2} s): {detail}", i + 1, took.as_secs_f64()),
            Err(why) => format!("FAIL {:>2} {name} ({:.2} s): {why}", i + 1, took.as_secs_f64()),
        };
        writeln!(err, "{line}").unwrap();
        if result.is_err() {
            failed.push(line);
        }
    }
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
