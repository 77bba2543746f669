//! Command-line front end. Exit codes: 0 success, 1 verification failure
//! (the report is still written), 2 bad input.

use std::f64::consts::PI;
use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::certify::{certify_system, Verdict};
use crate::cijt::{compute_n, find_events, interchange_pairs};
use crate::error::{Error, Result};
use crate::json::{
    parse_path, parse_system, to_canonical, CertifyOut, CijtOut, DegreeEntry, DegreesOut, Envelope, EventOut,
    IndexOut, IntervalEntry, IterateOut, NOut, OrbitOut, RunConfig, SplitOut, Status,
};
use crate::orbits::{action_ratio, degree_table, ellipsoid_system, OrbitSystem};
use crate::par;
use crate::path::index_report;
use crate::sp_core::classify_decomposition;
use crate::splitting::splitting_numbers;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "maslov", version, about = "Index iteration theory for closed orbits")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads for parallel searches.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Denominator bound for root-of-unity detection.
    #[arg(long = "q-max", global = true, default_value_t = tol::Q_MAX)]
    q_max: u64,
    /// Tolerance for mean-index alignment at events.
    #[arg(long, global = true, default_value_t = 0.125)]
    eta: f64,
    /// Largest event degree searched.
    #[arg(long = "dmax", global = true, default_value_t = 10_000)]
    d_max: i64,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Mean index, lower and upper indices, nullity and splitting data of a path.
    Index { path: String },
    /// Indices of the k-th iterate from the precise iteration formula.
    Iterate {
        path: String,
        #[arg(long)]
        k: u64,
    },
    /// Splitting numbers of the endpoint at e^{i omega}.
    Split {
        path: String,
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
    },
    /// Common index jump events of an orbit system.
    Cijt { system: String },
    /// Degree table of an ellipsoid with the given radii.
    Ellipsoid {
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<String>,
        #[arg(long, default_value_t = 101)]
        cutoff: i64,
    },
    /// Degree table of an orbit system.
    Degrees {
        system: String,
        #[arg(long)]
        cutoff: i64,
    },
    /// Irrational-ellipticity certificates.
    Certify { system: String },
}

/// Report body plus whether it counts as a verification failure.
struct Outcome {
    body: serde_json::Value,
    text: String,
    failed: bool,
}

fn outcome<T: Serialize>(body: &T, text: String, failed: bool) -> Result<Outcome> {
    let body = serde_json::to_value(body).map_err(|e| Error::Input(format!("serialisation failed: {e}")))?;
    Ok(Outcome { body, text, failed })
}

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {path}: {e}")))
}

fn orbit_rows(s: &OrbitSystem) -> Result<Vec<OrbitOut>> {
    s.orbits
        .iter()
        .map(|o| {
            Ok(OrbitOut {
                label: o.label.clone(),
                action: o.action,
                mean: o.mean().to_f64(),
                mu_minus: o.mu_minus(1)?,
                mu_plus: o.mu_plus(1)?,
                dyn_convex: o.report().dyn_convex,
            })
        })
        .collect()
}

fn degrees(s: &OrbitSystem, cutoff: i64, expected_ratio: Option<f64>) -> Result<Outcome> {
    let t = degree_table(s, cutoff)?;
    let mut assignment = Vec::new();
    for (&d, who) in &t.degrees {
        for &(i, k) in who {
            assignment.push(DegreeEntry { degree: d, orbit: s.orbits[i].label.clone(), k });
        }
    }
    let intervals = t
        .intervals
        .iter()
        .map(|&(i, k, lo, hi)| IntervalEntry { orbit: s.orbits[i].label.clone(), k, lo, hi })
        .collect();
    let count = t.degrees.len().max(1);
    let ratio = action_ratio(s, count)?;
    let ratio_ok = ratio.max_deviation < 1e-10
        && expected_ratio.map_or(true, |e| (ratio.ratio - e).abs() < 1e-10 * e.abs().max(1.0));
    let out = DegreesOut {
        cutoff,
        degrees: t.degrees.keys().copied().collect(),
        assignment,
        intervals,
        bijective: t.is_bijective(),
        problem: t.problem.clone(),
        skipped: t.skipped,
        orbits: orbit_rows(s)?,
        action_ratio: Some(ratio.ratio),
        action_ratio_deviation: Some(ratio.max_deviation),
        expected_ratio,
    };
    let shown: Vec<String> = out.degrees.iter().map(|d| d.to_string()).collect();
    let mut text = format!("degrees up to {cutoff}: {}\n", shown.join(","));
    match &t.problem {
        Some(p) => text.push_str(&format!("bijection: FAILED ({p})\n")),
        None if t.skipped => text.push_str("bijection: not checked (degenerate iterates)\n"),
        None => text.push_str("bijection: ok\n"),
    }
    text.push_str(&format!("action/mean ratio: {:.16e} (drift {:.3e})\n", ratio.ratio, ratio.max_deviation));
    outcome(&out, text, !(t.is_bijective() && ratio_ok))
}

fn execute(cmd: &Cmd, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Cmd::Index { path } => {
            let r = index_report(&parse_path(&read(path)?)?)?;
            let out = IndexOut::from(&r);
            let text = format!(
                "mean {}  mu- {}  mu+ {}  nullity {}  endpoint {}\n",
                out.mean_exact,
                out.mu_minus,
                out.mu_plus,
                out.nullity,
                out.endpoint.join(" ⋄ ")
            );
            outcome(&out, text, false)
        }
        Cmd::Iterate { path, k } => {
            if *k == 0 {
                return Err(Error::Parameter("--k must be positive".into()));
            }
            let r = index_report(&parse_path(&read(path)?)?)?;
            let prof = crate::iteration::IterationProfile::from_report(&r);
            let class = classify_decomposition(&r.endpoint, *k, tol::q_max());
            let out = IterateOut {
                k: *k,
                mu_minus: prof.mu_minus(*k)?,
                mu_plus: prof.mu_plus(*k)?,
                nullity: prof.nullity(*k)?,
                mean: r.mean.to_f64() * *k as f64,
                admissible: class.admissible,
                good: class.good_if_iterate,
                caveats: class.caveats,
            };
            let text = format!("k {}  mu- {}  mu+ {}  nullity {}\n", out.k, out.mu_minus, out.mu_plus, out.nullity);
            outcome(&out, text, false)
        }
        Cmd::Split { path, omega } => {
            let r = index_report(&parse_path(&read(path)?)?)?;
            let (s_plus, s_minus) = splitting_numbers(&r.endpoint, Complex64::from_polar(1.0, *omega))?;
            let out = SplitOut { omega: *omega, s_plus, s_minus };
            outcome(&out, format!("S+ {s_plus}  S- {s_minus}\n"), false)
        }
        Cmd::Cijt { system } => {
            let s = parse_system(&read(system)?)?;
            let nd = compute_n(&s)?;
            let events = find_events(&s, cfg.eta, cfg.d_max)?;
            let pair = interchange_pairs(&events).into_iter().next().map(|(a, b)| (a.d, b.d));
            let message = events.is_empty().then(|| "no events under budget".to_string());
            let out = CijtOut {
                n_data: NOut::from(&nd),
                count: events.len(),
                events: events.iter().map(EventOut::from).collect(),
                interchange: pair,
                message,
            };
            let mut text = format!("N = {}  events: {}\n", nd.n, events.len());
            for e in &events {
                text.push_str(&format!("  d = {}  k = {:?}\n", e.d, e.k));
            }
            if let Some(m) = &out.message {
                text.push_str(m);
                text.push('\n');
            }
            outcome(&out, text, false)
        }
        Cmd::Ellipsoid { r, cutoff } => {
            let radii = r
                .iter()
                .map(|t| crate::exact::parse_real(t).ok_or_else(|| Error::Input(format!("cannot parse radius {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let s = ellipsoid_system(&radii)?;
            let expected = PI / radii.iter().map(|x| 1.0 / x.to_f64()).sum::<f64>();
            degrees(&s, *cutoff, Some(expected))
        }
        Cmd::Degrees { system, cutoff } => degrees(&parse_system(&read(system)?)?, *cutoff, None),
        Cmd::Certify { system } => {
            let s = parse_system(&read(system)?)?;
            let certs = certify_system(&s, cfg.eta, cfg.d_max)?;
            let certified = certs.iter().filter(|c| c.is_certified()).count();
            let rejected = certs.iter().any(|c| c.verdict == Verdict::Rejected);
            let mut text = String::new();
            for c in &certs {
                let verdict = match c.verdict {
                    Verdict::IrrationallyElliptic => "irrationally elliptic".to_string(),
                    Verdict::Rejected => format!("rejected at step {}", c.failed_step.unwrap_or(0)),
                    Verdict::Inconclusive => "inconclusive".to_string(),
                };
                text.push_str(&format!("{}: {verdict}", c.label));
                if let Some(st) = &c.step4 {
                    let a: Vec<String> = st.angles.iter().map(|x| format!("{x:.12}")).collect();
                    text.push_str(&format!("  angles [{}]", a.join(", ")));
                }
                if let Some(r) = &c.reason {
                    text.push_str(&format!("  ({r})"));
                }
                text.push('\n');
            }
            let out = CertifyOut { certified, certificates: certs };
            outcome(&out, text, rejected || certified < 2)
        }
    }
}

fn config_of(cli: &Cli) -> RunConfig {
    let mut c = RunConfig {
        eta: cli.eta,
        d_max: cli.d_max,
        q_max: cli.q_max,
        format: match cli.format {
            Format::Json => "json".into(),
            Format::Text => "text".into(),
        },
        threads: cli.threads,
        ..RunConfig::default()
    };
    match &cli.cmd {
        Cmd::Index { path } => (c.command, c.input) = ("index".into(), Some(path.clone())),
        Cmd::Iterate { path, k } => {
            (c.command, c.input, c.k) = ("iterate".into(), Some(path.clone()), Some(*k));
        }
        Cmd::Split { path, omega } => {
            (c.command, c.input, c.omega) = ("split".into(), Some(path.clone()), Some(*omega));
        }
        Cmd::Cijt { system } => (c.command, c.input) = ("cijt".into(), Some(system.clone())),
        Cmd::Ellipsoid { r, cutoff } => {
            (c.command, c.r, c.cutoff) = ("ellipsoid".into(), Some(r.clone()), Some(*cutoff));
        }
        Cmd::Degrees { system, cutoff } => {
            (c.command, c.input, c.cutoff) = ("degrees".into(), Some(system.clone()), Some(*cutoff));
        }
        Cmd::Certify { system } => (c.command, c.input) = ("certify".into(), Some(system.clone())),
    }
    c
}

fn emit(out: &mut dyn Write, cfg: &RunConfig, env: &Envelope<serde_json::Value>, text: &str) -> Result<()> {
    let s = if cfg.format == "text" {
        let mut t = format!("{} [{:?}]\n", cfg.command, env.status);
        t.push_str(text);
        if let Some(e) = &env.error {
            t.push_str(&format!("error: {e}\n"));
        }
        t
    } else {
        to_canonical(env)? + "\n"
    };
    out.write_all(s.as_bytes()).map_err(|e| Error::Input(format!("cannot write report: {e}")))
}

/// Run with explicit output streams; returns the exit code.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(target, "{e}");
            return code;
        }
    };
    let cfg = config_of(&cli);
    if let Some(n) = cli.threads {
        par::set_threads(n.max(1));
    }
    tol::set_q_max(cli.q_max);
    let res = if !(cli.eta > 0.0 && cli.eta < 0.5) {
        Err(Error::Parameter(format!("--eta must lie in (0, 1/2), got {}", cli.eta)))
    } else {
        execute(&cli.cmd, &cfg)
    };
    let (env, text, code) = match res {
        Ok(o) => {
            let status = if o.failed { Status::VerificationFailed } else { Status::Ok };
            (Envelope { config: cfg.clone(), status, result: Some(o.body), error: None }, o.text, i32::from(o.failed))
        }
        Err(e) if e.is_verification() => (
            Envelope { config: cfg.clone(), status: Status::VerificationFailed, result: None, error: Some(e.to_string()) },
            String::new(),
            1,
        ),
        Err(e) => {
            let _ = writeln!(err, "maslov {}: {e}", cfg.command);
            return 2;
        }
    };
    match emit(out, &cfg, &env, &text) {
        Ok(()) => code,
        Err(e) => {
            let _ = writeln!(err, "maslov: {e}");
            2
        }
    }
}

/// Run against the process's standard streams.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
