//! Symplectic paths `[0,1] -> Sp(2m)` starting at the identity, the rotation
//! function, mean and Conley-Zehnder indices, and the perturbation oracle.

mod generic;
mod index;
mod oracle;
mod rho;

use std::f64::consts::TAU;
use std::sync::Arc;

pub use generic::GenericAtom;
pub use index::{index_report, maslov_loop_index, mean_index, IndexReport};
pub use oracle::perturbation_oracle;
pub use rho::{rho, winding};


use crate::error::{Error, Result};
use crate::exact::Real;
use crate::linalg::{rot2, Mat};
use crate::sp_core::{diamond_all, SymplecticMatrix};

/// A closed-form path piece on `Sp(2)` (or `Sp(2k)` for generic atoms).
#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    /// `R(2 pi turns t)`.
    Rotation { turns: Real },
    /// `diag(e^{rate t}, e^{-rate t})`.
    Hyperbolic { rate: f64 },
    /// `[[1, a t], [0, 1]]`.
    Shear { a: f64 },
    /// `G(t0 + (t1 - t0) t) G(t0)^{-1}` for the polar-decomposition path `G` to a target.
    Generic { atom: Arc<GenericAtom>, t0: f64, t1: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum AtomKind {
    Rotation,
    Hyperbolic,
    Shear,
    Generic,
}

impl Atom {
    /// Rotation atom from an angle in radians.
    pub fn rotation_angle(angle: f64) -> Atom {
        Atom::Rotation { turns: Real::Float(angle / TAU) }
    }

    pub fn rotation(turns: Real) -> Atom {
        Atom::Rotation { turns }
    }

    pub fn generic(target: SymplecticMatrix) -> Result<Atom> {
        Ok(Atom::Generic { atom: Arc::new(GenericAtom::new(target)?), t0: 0.0, t1: 1.0 })
    }

    pub fn dim(&self) -> usize {
        match self {
            Atom::Generic { atom, .. } => atom.dim(),
            _ => 2,
        }
    }

    pub(crate) fn kind(&self) -> AtomKind {
        match self {
            Atom::Rotation { .. } => AtomKind::Rotation,
            Atom::Hyperbolic { .. } => AtomKind::Hyperbolic,
            Atom::Shear { .. } => AtomKind::Shear,
            Atom::Generic { .. } => AtomKind::Generic,
        }
    }

    /// Constant identity path (a zero-parameter one-parameter atom).
    pub(crate) fn is_identity(&self) -> bool {
        match self {
            Atom::Rotation { turns } => turns.is_exact() && turns.signum() == 0 || turns.to_f64() == 0.0,
            Atom::Hyperbolic { rate } => *rate == 0.0,
            Atom::Shear { a } => *a == 0.0,
            Atom::Generic { .. } => false,
        }
    }

    pub fn eval(&self, t: f64) -> SymplecticMatrix {
        match self {
            Atom::Rotation { turns } => SymplecticMatrix::trusted(rot2(TAU * turns.to_f64() * t)),
            Atom::Hyperbolic { rate } => {
                let e = (rate * t).exp();
                SymplecticMatrix::trusted(Mat::from_row_slice(2, 2, &[e, 0.0, 0.0, 1.0 / e]))
            }
            Atom::Shear { a } => SymplecticMatrix::trusted(Mat::from_row_slice(2, 2, &[1.0, a * t, 0.0, 1.0])),
            Atom::Generic { atom, t0, t1 } => {
                let g = atom.eval(t0 + (t1 - t0) * t);
                if *t0 == 0.0 {
                    g
                } else {
                    g.compose(&atom.eval(*t0).inverse())
                }
            }
        }
    }

    /// Restriction to the time window `[s0, s1]`, re-based to start at the identity.
    pub(crate) fn window(&self, s0: f64, s1: f64) -> Atom {
        let w = s1 - s0;
        match self {
            Atom::Rotation { turns } => Atom::Rotation {
                turns: match Real::from_f64(w) {
                    r @ Real::Exact(_) => turns.mul(&r),
                    Real::Float(x) => Real::Float(turns.to_f64() * x),
                },
            },
            Atom::Hyperbolic { rate } => Atom::Hyperbolic { rate: rate * w },
            Atom::Shear { a } => Atom::Shear { a: a * w },
            Atom::Generic { atom, t0, t1 } => {
                let span = t1 - t0;
                Atom::Generic { atom: atom.clone(), t0: t0 + span * s0, t1: t0 + span * s1 }
            }
        }
    }

    /// Upper estimate of how many turns the rotation function makes over the atom.
    pub(crate) fn speed(&self) -> f64 {
        match self {
            Atom::Rotation { turns } => turns.to_f64().abs(),
            Atom::Hyperbolic { .. } | Atom::Shear { .. } => 0.0,
            Atom::Generic { atom, t0, t1 } => atom.speed() * (t1 - t0).abs(),
        }
    }
}

/// A ⋄-sum of atoms traversed over one time slice.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub atoms: Vec<Atom>,
}

impl Segment {
    pub fn new(atoms: Vec<Atom>) -> Segment {
        Segment { atoms }
    }

    pub fn dim(&self) -> usize {
        self.atoms.iter().map(Atom::dim).sum()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.atoms.iter().map(Atom::dim).collect()
    }

    pub fn eval(&self, t: f64) -> SymplecticMatrix {
        let parts: Vec<SymplecticMatrix> = self.atoms.iter().map(|a| a.eval(t)).collect();
        diamond_all(&parts)
    }

    pub(crate) fn speed(&self) -> f64 {
        self.atoms.iter().map(Atom::speed).sum()
    }

    fn window(&self, s0: f64, s1: f64) -> Segment {
        Segment { atoms: self.atoms.iter().map(|a| a.window(s0, s1)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Symbolic(Vec<Segment>),
    Sampled(Vec<(f64, SymplecticMatrix)>),
}

/// One evaluation piece: on `[t0, t1]` the path is `seg(tau) * start`.
#[derive(Clone, Debug)]
pub(crate) struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub seg: Segment,
    pub start: SymplecticMatrix,
}

#[derive(Clone, Debug)]
pub struct SymplecticPath {
    dim: usize,
    repr: Representation,
    pieces: Vec<Piece>,
}

impl PartialEq for SymplecticPath {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.repr == other.repr
    }
}

/// Per-slot behaviour of a slot-aligned symbolic path.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum SlotKind {
    Rotation(Real),
    Hyperbolic(f64),
    Shear(f64),
    Numeric,
}

impl SymplecticPath {
    /// Concatenation of segments, each run over an equal share of `[0, 1]`.
    pub fn symbolic(segments: Vec<Segment>) -> Result<SymplecticPath> {
        if segments.is_empty() {
            return Err(Error::Input("a symbolic path needs at least one segment".into()));
        }
        let dim = segments[0].dim();
        if dim == 0 || segments.iter().any(|s| s.dim() != dim) {
            return Err(Error::Dimension("all segments must have the same positive dimension".into()));
        }
        let n = segments.len() as f64;
        let mut pieces = Vec::with_capacity(segments.len());
        let mut start = SymplecticMatrix::identity(dim);
        for (i, s) in segments.iter().enumerate() {
            let end = s.eval(1.0).compose(&start);
            pieces.push(Piece { t0: i as f64 / n, t1: (i + 1) as f64 / n, seg: s.clone(), start });
            start = end;
        }
        Ok(SymplecticPath { dim, repr: Representation::Symbolic(segments), pieces })
    }

    /// A path through sampled nodes, interpolated between nodes by generic atoms.
    pub fn sampled(nodes: Vec<(f64, SymplecticMatrix)>) -> Result<SymplecticPath> {
        if nodes.len() < 2 {
            return Err(Error::Input("a sampled path needs at least two nodes".into()));
        }
        let dim = nodes[0].1.dim();
        if nodes.iter().any(|(_, m)| m.dim() != dim) {
            return Err(Error::Dimension("sample matrices differ in size".into()));
        }
        if nodes[0].0 != 0.0 || (nodes[nodes.len() - 1].0 - 1.0).abs() > 1e-12 {
            return Err(Error::Input("sample times must start at 0 and end at 1".into()));
        }
        if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Input("sample times must be strictly increasing".into()));
        }
        let dev = nodes[0].1.distance(&SymplecticMatrix::identity(dim));
        if dev > 1e-9 {
            return Err(Error::Input(format!("sampled path must start at the identity (off by {dev:.3e})")));
        }
        let mut pieces = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let delta = w[1].1.compose(&w[0].1.inverse());
            let atom = Atom::generic(delta)?;
            pieces.push(Piece { t0: w[0].0, t1: w[1].0, seg: Segment::new(vec![atom]), start: w[0].1.clone() });
        }
        Ok(SymplecticPath { dim, repr: Representation::Sampled(nodes), pieces })
    }

    /// Single-segment path from atoms.
    pub fn from_atoms(atoms: Vec<Atom>) -> Result<SymplecticPath> {
        Self::symbolic(vec![Segment::new(atoms)])
    }

    /// `R(2 pi turns t)` on `Sp(2)`.
    pub fn rotation(turns: Real) -> SymplecticPath {
        Self::from_atoms(vec![Atom::Rotation { turns }]).expect("rotation path is valid")
    }

    /// Constant identity path on `Sp(dim)`.
    pub fn constant(dim: usize) -> SymplecticPath {
        let atoms = (0..dim / 2).map(|_| Atom::Rotation { turns: Real::zero() }).collect();
        Self::from_atoms(atoms).expect("identity path is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_dim(&self) -> usize {
        self.dim / 2
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn segments(&self) -> Option<&[Segment]> {
        match &self.repr {
            Representation::Symbolic(s) => Some(s),
            Representation::Sampled(_) => None,
        }
    }

    pub(crate) fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn eval(&self, t: f64) -> SymplecticMatrix {
        let t = t.clamp(0.0, 1.0);
        let p = self
            .pieces
            .iter()
            .find(|p| t <= p.t1)
            .unwrap_or_else(|| self.pieces.last().expect("non-empty path"));
        let tau = ((t - p.t0) / (p.t1 - p.t0)).clamp(0.0, 1.0);
        p.seg.eval(tau).compose(&p.start)
    }

    pub fn endpoint(&self) -> SymplecticMatrix {
        let p = self.pieces.last().expect("non-empty path");
        p.seg.eval(1.0).compose(&p.start)
    }

    /// `self` followed by `other` (which is moved to start at `self(1)`).
    pub fn concat(&self, other: &SymplecticPath) -> Result<SymplecticPath> {
        if self.dim != other.dim {
            return Err(Error::Dimension("concatenated paths differ in dimension".into()));
        }
        match (&self.repr, &other.repr) {
            (Representation::Symbolic(a), Representation::Symbolic(b)) => {
                Self::symbolic(a.iter().chain(b.iter()).cloned().collect())
            }
            _ => {
                let end = self.endpoint();
                let mut nodes: Vec<(f64, SymplecticMatrix)> =
                    self.sample_nodes().into_iter().map(|(t, m)| (t / 2.0, m)).collect();
                for (t, m) in other.sample_nodes().into_iter().skip(1) {
                    nodes.push((0.5 + t / 2.0, m.compose(&end)));
                }
                Self::sampled(nodes)
            }
        }
    }

    /// Nodes at piece boundaries (exact for sampled paths).
    fn sample_nodes(&self) -> Vec<(f64, SymplecticMatrix)> {
        match &self.repr {
            Representation::Sampled(n) => n.clone(),
            Representation::Symbolic(_) => {
                let mut out = vec![(0.0, SymplecticMatrix::identity(self.dim))];
                for p in &self.pieces {
                    out.push((p.t1, p.seg.eval(1.0).compose(&p.start)));
                }
                out
            }
        }
    }

    /// Time-refined copy with `parts` equal sub-segments per segment.
    fn refine(&self, parts: usize) -> Option<Vec<Segment>> {
        let segs = self.segments()?;
        let mut out = Vec::with_capacity(segs.len() * parts);
        for s in segs {
            for j in 0..parts {
                out.push(s.window(j as f64 / parts as f64, (j + 1) as f64 / parts as f64));
            }
        }
        Some(out)
    }

    /// `self ⋄ other`; segment counts are brought to a common refinement.
    pub fn diamond(&self, other: &SymplecticPath) -> Result<SymplecticPath> {
        let (Some(a), Some(b)) = (self.segments(), other.segments()) else {
            return Err(Error::Input("the ⋄-sum of paths needs symbolic inputs".into()));
        };
        let l = num_integer::lcm(a.len(), b.len());
        let ra = self.refine(l / a.len()).expect("symbolic");
        let rb = other.refine(l / b.len()).expect("symbolic");
        let segs = ra
            .into_iter()
            .zip(rb)
            .map(|(x, y)| Segment::new(x.atoms.into_iter().chain(y.atoms).collect()))
            .collect();
        Self::symbolic(segs)
    }

    /// The `k`-th iteration: `Phi(t) Phi(1)^j` on the `j`-th of `k` equal slices.
    pub fn power(&self, k: u64) -> Result<SymplecticPath> {
        if k == 0 {
            return Err(Error::Parameter("iteration count must be positive".into()));
        }
        match &self.repr {
            Representation::Symbolic(segs) => {
                let mut out = Vec::with_capacity(segs.len() * k as usize);
                for _ in 0..k {
                    out.extend(segs.iter().cloned());
                }
                Self::symbolic(out)
            }
            Representation::Sampled(nodes) => {
                let end = self.endpoint();
                let mut acc = SymplecticMatrix::identity(self.dim);
                let mut out = vec![(0.0, acc.clone())];
                for j in 0..k {
                    for (t, m) in nodes.iter().skip(1) {
                        out.push(((j as f64 + t) / k as f64, m.compose(&acc)));
                    }
                    acc = end.compose(&acc);
                }
                Self::sampled(out)
            }
        }
    }

    /// Same atom dimensions in every segment, so each ⋄-slot evolves on its own.
    pub fn is_slot_aligned(&self) -> bool {
        match self.segments() {
            Some(s) => s.windows(2).all(|w| w[0].dims() == w[1].dims()),
            None => false,
        }
    }

    /// Per-slot sub-paths of a slot-aligned path, with their closed-form kind.
    pub(crate) fn slots(&self) -> Option<Vec<(SymplecticPath, SlotKind)>> {
        if !self.is_slot_aligned() {
            return None;
        }
        let segs = self.segments()?;
        let n = segs[0].atoms.len();
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let atoms: Vec<&Atom> = segs.iter().map(|s| &s.atoms[j]).collect();
            let live: Vec<&&Atom> = atoms.iter().filter(|a| !a.is_identity()).collect();
            let kind = match live.first().map(|a| a.kind()) {
                None => match atoms[0] {
                    Atom::Generic { .. } => SlotKind::Numeric,
                    _ => SlotKind::Rotation(Real::zero()),
                },
                Some(k) if live.iter().all(|a| a.kind() == k) => match k {
                    AtomKind::Rotation => SlotKind::Rotation(live.iter().fold(Real::zero(), |acc, a| match a {
                        Atom::Rotation { turns } => acc.add(turns),
                        _ => acc,
                    })),
                    AtomKind::Hyperbolic => SlotKind::Hyperbolic(
                        live.iter().map(|a| if let Atom::Hyperbolic { rate } = a { *rate } else { 0.0 }).sum(),
                    ),
                    AtomKind::Shear => {
                        SlotKind::Shear(live.iter().map(|a| if let Atom::Shear { a } = a { *a } else { 0.0 }).sum())
                    }
                    AtomKind::Generic => SlotKind::Numeric,
                },
                Some(_) => SlotKind::Numeric,
            };
            let sub = Self::symbolic(atoms.iter().map(|a| Segment::new(vec![(*a).clone()])).collect())
                .expect("slot path is valid");
            out.push((sub, kind));
        }
        Some(out)
    }
}

/// `k`-th iteration path (free-function form).
pub fn power_path(p: &SymplecticPath, k: u64) -> Result<SymplecticPath> {
    p.power(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_endpoint_matches_matrix_power() {
        let m = SymplecticMatrix::new(Mat::from_row_slice(2, 2, &[1.5, 0.5, 0.5, 0.8333333333333334])).unwrap();
        let p = SymplecticPath::symbolic(vec![
            Segment::new(vec![Atom::rotation_angle(1.0), Atom::Shear { a: 0.3 }]),
            Segment::new(vec![Atom::generic(m).unwrap(), Atom::Hyperbolic { rate: 0.2 }]),
        ])
        .unwrap();
        let p5 = p.power(5).unwrap();
        assert!(p5.endpoint().distance(&p.endpoint().pow(5)) < 1e-10);
    }

    #[test]
    fn sampled_power_and_concat() {
        let nodes: Vec<(f64, SymplecticMatrix)> =
            (0..=4).map(|i| (i as f64 / 4.0, SymplecticMatrix::trusted(rot2(0.9 * i as f64 / 4.0)))).collect();
        let p = SymplecticPath::sampled(nodes).unwrap();
        assert!(p.eval(0.5).distance(&SymplecticMatrix::trusted(rot2(0.45))) < 1e-12);
        let p3 = p.power(3).unwrap();
        assert!(p3.endpoint().distance(&SymplecticMatrix::trusted(rot2(2.7))) < 1e-12);
        let c = p.concat(&p).unwrap();
        assert!(c.endpoint().distance(&SymplecticMatrix::trusted(rot2(1.8))) < 1e-12);
    }

    #[test]
    fn diamond_refines_segments() {
        let a = SymplecticPath::rotation(Real::ratio(1, 3));
        let b = SymplecticPath::symbolic(vec![
            Segment::new(vec![Atom::Shear { a: 1.0 }]),
            Segment::new(vec![Atom::Hyperbolic { rate: 0.5 }]),
        ])
        .unwrap();
        let d = a.diamond(&b).unwrap();
        assert!(d.is_slot_aligned());
        let e = crate::sp_core::diamond(&a.endpoint(), &b.endpoint());
        assert!(d.endpoint().distance(&e) < 1e-12);
        let slots = d.slots().unwrap();
        assert_eq!(slots[0].1, SlotKind::Rotation(Real::ratio(1, 3)));
        assert_eq!(slots[1].1, SlotKind::Numeric);
    }
}
