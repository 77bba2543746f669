//! JSON schemas: path and orbit-system inputs, report records, and the
//! canonical writer (sorted keys, floats with 17 significant digits).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::certify::Certificate;
use crate::cijt::{BoundStatus, CijtEvent, NData};
use crate::error::{Error, Result};
use crate::exact::{parse_real, Real};
use crate::orbits::{ellipsoid_system, OrbitSystem, PrimeOrbitSpec};
use crate::path::{Atom, IndexReport, Segment, SymplecticPath};
use crate::sp_core::SymplecticMatrix;
use crate::splitting::SplitEntry;

/// A number or a token such as `"sqrt(2)"`, `"phi"` or `"7/10"`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum NumOrToken {
    Num(f64),
    Token(String),
}

impl NumOrToken {
    pub fn to_real(&self) -> Result<Real> {
        match self {
            NumOrToken::Num(x) if x.is_finite() => Ok(Real::from_f64(*x)),
            NumOrToken::Num(x) => Err(Error::Input(format!("non-finite number {x}"))),
            NumOrToken::Token(s) => parse_real(s).ok_or_else(|| Error::Input(format!("cannot parse number {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AtomDoc {
    /// `angle` in radians, or `turns` (number or exact token).
    Rotation {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        turns: Option<NumOrToken>,
    },
    Hyperbolic {
        rate: f64,
    },
    Shear {
        a: f64,
    },
    Generic {
        target: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDoc {
    pub atoms: Vec<AtomDoc>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SampleDoc {
    pub t: f64,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PathDoc {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<SampleDoc>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitDoc {
    pub label: String,
    pub action: f64,
    pub path: PathDoc,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EllipsoidDoc {
    pub r: Vec<NumOrToken>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum SystemDoc {
    Ellipsoid { ellipsoid: EllipsoidDoc },
    Explicit { n: usize, orbits: Vec<OrbitDoc> },
}

fn atom_from(doc: &AtomDoc) -> Result<Atom> {
    Ok(match doc {
        AtomDoc::Rotation { angle: Some(a), turns: None } => Atom::rotation_angle(*a),
        AtomDoc::Rotation { angle: None, turns: Some(t) } => Atom::rotation(t.to_real()?),
        AtomDoc::Rotation { .. } => {
            return Err(Error::Input("rotation atoms need exactly one of \"angle\" and \"turns\"".into()))
        }
        AtomDoc::Hyperbolic { rate } => Atom::Hyperbolic { rate: *rate },
        AtomDoc::Shear { a } => Atom::Shear { a: *a },
        AtomDoc::Generic { target } => Atom::generic(SymplecticMatrix::from_rows(target)?)?,
    })
}

impl PathDoc {
    pub fn to_path(&self) -> Result<SymplecticPath> {
        let p = match (&self.segments, &self.samples) {
            (Some(segs), None) => {
                let segments = segs
                    .iter()
                    .map(|s| s.atoms.iter().map(atom_from).collect::<Result<Vec<_>>>().map(Segment::new))
                    .collect::<Result<Vec<_>>>()?;
                SymplecticPath::symbolic(segments)?
            }
            (None, Some(samples)) => {
                let nodes = samples
                    .iter()
                    .map(|s| SymplecticMatrix::from_rows(&s.matrix).map(|m| (s.t, m)))
                    .collect::<Result<Vec<_>>>()?;
                SymplecticPath::sampled(nodes)?
            }
            _ => return Err(Error::Input("a path needs exactly one of \"segments\" and \"samples\"".into())),
        };
        if p.dim() != self.dim {
            return Err(Error::Dimension(format!("path declares dim {} but its atoms give {}", self.dim, p.dim())));
        }
        Ok(p)
    }
}

impl SystemDoc {
    pub fn to_system(&self) -> Result<OrbitSystem> {
        match self {
            SystemDoc::Ellipsoid { ellipsoid } => {
                let r = ellipsoid.r.iter().map(NumOrToken::to_real).collect::<Result<Vec<_>>>()?;
                ellipsoid_system(&r)
            }
            SystemDoc::Explicit { n, orbits } => {
                let specs = orbits
                    .iter()
                    .map(|o| PrimeOrbitSpec::new(o.label.clone(), o.action, o.path.to_path()?))
                    .collect::<Result<Vec<_>>>()?;
                OrbitSystem::new(*n, specs)
            }
        }
    }
}

fn from_str<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("{what} JSON: {e}")))
}

pub fn parse_path(text: &str) -> Result<SymplecticPath> {
    from_str::<PathDoc>(text, "path")?.to_path()
}

pub fn parse_system(text: &str) -> Result<OrbitSystem> {
    from_str::<SystemDoc>(text, "orbit-system")?.to_system()
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(&m[k], out);
            }
            out.push('}');
        }
    }
}

/// Byte-stable rendering: sorted keys, no whitespace, floats as `{:.16e}`.
pub fn to_canonical<T: Serialize>(x: &T) -> Result<String> {
    let v = serde_json::to_value(x).map_err(|e| Error::Input(format!("serialisation failed: {e}")))?;
    let mut out = String::new();
    write_value(&v, &mut out);
    Ok(out)
}

/// Flags of a run, echoed into every report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<String>,
    pub eta: f64,
    pub d_max: i64,
    pub q_max: u64,
    pub cutoff: Option<i64>,
    pub k: Option<u64>,
    pub omega: Option<f64>,
    pub r: Option<Vec<String>>,
    pub format: String,
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    VerificationFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub config: RunConfig,
    pub status: Status,
    pub result: Option<T>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub turns: f64,
    pub turns_exact: String,
    pub s_plus: u32,
    pub s_minus: u32,
    pub nullity: usize,
}

impl From<&SplitEntry> for SplitRow {
    fn from(e: &SplitEntry) -> Self {
        SplitRow {
            turns: e.turns.to_f64(),
            turns_exact: e.turns.to_token(),
            s_plus: e.s_plus,
            s_minus: e.s_minus,
            nullity: e.nullity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexOut {
    pub dim: usize,
    pub mean: f64,
    pub mean_exact: String,
    pub mu_minus: i64,
    pub mu_plus: i64,
    pub nullity: usize,
    pub splitting_at_one: (u32, u32),
    pub circle: Vec<SplitRow>,
    pub c: u32,
    pub dyn_convex: bool,
    pub endpoint: Vec<String>,
    pub mean_identity_residual: f64,
}

impl From<&IndexReport> for IndexOut {
    fn from(r: &IndexReport) -> Self {
        IndexOut {
            dim: r.dim,
            mean: r.mean.to_f64(),
            mean_exact: r.mean.to_token(),
            mu_minus: r.lower,
            mu_plus: r.upper,
            nullity: r.nullity,
            splitting_at_one: r.splitting_at_one,
            circle: r.circle_data.iter().map(SplitRow::from).collect(),
            c: r.c,
            dyn_convex: r.dyn_convex,
            endpoint: r.endpoint.blocks.iter().map(|b| b.label()).collect(),
            mean_identity_residual: crate::iteration::mean_identity_residual(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateOut {
    pub k: u64,
    pub mu_minus: i64,
    pub mu_plus: i64,
    pub nullity: usize,
    pub mean: f64,
    pub admissible: bool,
    pub good: bool,
    pub caveats: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitOut {
    pub omega: f64,
    pub s_plus: u32,
    pub s_minus: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChecksOut {
    pub divisible: bool,
    pub deviations: Vec<f64>,
    pub ir1: Vec<bool>,
    pub ir2: Vec<bool>,
    pub ir3: Vec<bool>,
    pub bounds: String,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventOut {
    pub d: i64,
    pub k: Vec<u64>,
    pub eta: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub checks: ChecksOut,
}

impl From<&CijtEvent> for EventOut {
    fn from(e: &CijtEvent) -> Self {
        let c = &e.checks;
        EventOut {
            d: e.d,
            k: e.k.clone(),
            eta: e.eta,
            n: e.n,
            checks: ChecksOut {
                divisible: c.divisible,
                deviations: c.paths.iter().map(|p| p.deviation).collect(),
                ir1: c.paths.iter().map(|p| p.ir1).collect(),
                ir2: c.paths.iter().map(|p| p.ir2).collect(),
                ir3: c.paths.iter().map(|p| p.ir3).collect(),
                bounds: match &c.bounds {
                    BoundStatus::Passed => "passed".into(),
                    BoundStatus::NotApplicable => "not_applicable".into(),
                    BoundStatus::Failed(s) => format!("failed: {s}"),
                },
                failures: c.failures.clone(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NOut {
    #[serde(rename = "N")]
    pub n: u64,
    pub p: u64,
    pub s: Vec<u64>,
}

impl From<&NData> for NOut {
    fn from(d: &NData) -> Self {
        NOut { n: d.n, p: d.p, s: d.s.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CijtOut {
    pub n_data: NOut,
    pub count: usize,
    pub events: Vec<EventOut>,
    /// First interchange pair `(d, d')`.
    pub interchange: Option<(i64, i64)>,
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitOut {
    pub label: String,
    pub action: f64,
    pub mean: f64,
    pub mu_minus: i64,
    pub mu_plus: i64,
    pub dyn_convex: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeEntry {
    pub degree: i64,
    pub orbit: String,
    pub k: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalEntry {
    pub orbit: String,
    pub k: u64,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreesOut {
    pub cutoff: i64,
    pub degrees: Vec<i64>,
    pub assignment: Vec<DegreeEntry>,
    pub intervals: Vec<IntervalEntry>,
    pub bijective: bool,
    pub problem: Option<String>,
    pub skipped: bool,
    pub orbits: Vec<OrbitOut>,
    pub action_ratio: Option<f64>,
    pub action_ratio_deviation: Option<f64>,
    /// `pi / sum(1/r_j)` for ellipsoids.
    pub expected_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOut {
    pub certified: usize,
    pub certificates: Vec<Certificate>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sorted_and_stable() {
        let v: Value = serde_json::from_str(r#"{"b":1,"a":[0.1,2.5e-3,true,null],"c":{"z":"x","y":-3}}"#).unwrap();
        let s = to_canonical(&v).unwrap();
        assert_eq!(s, r#"{"a":[1.0000000000000001e-1,2.5000000000000001e-3,true,null],"b":1,"c":{"y":-3,"z":"x"}}"#);
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(to_canonical(&back).unwrap(), s);
    }

    #[test]
    fn parses_paths_and_systems() {
        let p = parse_path(r#"{"dim":2,"segments":[{"atoms":[{"kind":"rotation","turns":"7/10"}]}]}"#).unwrap();
        assert_eq!(crate::path::index_report(&p).unwrap().lower, 1);
        let e = parse_path(r#"{"dim":4,"segments":[{"atoms":[{"kind":"shear","a":1}]}]}"#).unwrap_err();
        assert!(matches!(e, Error::Dimension(_)));
        assert!(matches!(parse_path(r#"{"dim":2}"#), Err(Error::Input(_))));
        let s = parse_system(r#"{"ellipsoid":{"r":[1,"sqrt(2)"]}}"#).unwrap();
        assert_eq!(s.orbits.len(), 2);
        assert!(matches!(parse_system(r#"{"ellipsoid":{"r":[1,"3/2"]}}"#), Err(Error::RationalRatio { .. })));
        let sampled = parse_path(
            r#"{"dim":2,"samples":[{"t":0,"matrix":[[1,0],[0,1]]},{"t":1,"matrix":[[-1,0],[0,-1]]}]}"#,
        );
        assert!(sampled.is_ok());
    }
}
