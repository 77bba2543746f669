//! Shared generators for the integration suites.
#![allow(dead_code)]

use std::sync::Mutex;

use maslov::iteration::mean_identity_residual;
use maslov::path::{index_report, Atom, IndexReport, Segment, SymplecticPath};
use maslov::sp_core::{diamond_all, make_normal_form, BasicNormalForm, SymplecticMatrix};
use maslov::{Real, Surd};
use rand::Rng;

/// Largest mean-identity residual seen by [`report`].
static WORST_RESIDUAL: Mutex<f64> = Mutex::new(0.0);

/// `index_report` that also records the mean-identity residual.
pub fn report(p: &SymplecticPath) -> maslov::Result<IndexReport> {
    let r = index_report(p)?;
    let res = mean_identity_residual(&r);
    let mut w = WORST_RESIDUAL.lock().unwrap();
    if res > *w || res.is_nan() {
        *w = res;
    }
    Ok(r)
}

pub fn worst_residual() -> f64 {
    *WORST_RESIDUAL.lock().unwrap()
}

/// How a ⋄-slot evolves across the segments of a random path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    /// Exact rotation turns; the total may be rational or quadratic irrational.
    Rotation,
    /// Rotation whose total is a whole number of turns (endpoint `Id`).
    Loop,
    /// Float turns.
    FloatRotation,
    Hyperbolic,
    /// `-diag(e^r, e^-r)`: a half turn followed by a stretch.
    NegHyperbolic,
    Shear,
}

pub const EXACT_KINDS: [SlotKind; 5] =
    [SlotKind::Rotation, SlotKind::Loop, SlotKind::Hyperbolic, SlotKind::NegHyperbolic, SlotKind::Shear];
pub const ALL_KINDS: [SlotKind; 6] = [
    SlotKind::Rotation,
    SlotKind::Loop,
    SlotKind::FloatRotation,
    SlotKind::Hyperbolic,
    SlotKind::NegHyperbolic,
    SlotKind::Shear,
];

pub fn exact_turns<R: Rng>(rng: &mut R) -> Real {
    let p = rng.gen_range(-12..=12);
    let q = rng.gen_range(1..=8);
    if rng.gen_bool(0.5) {
        Real::ratio(p, q)
    } else {
        let d = [2u32, 3, 5, 7][rng.gen_range(0..4)];
        let p = if p == 0 { 1 } else { p };
        Real::ratio(p, q).mul(&Real::Exact(Surd::sqrt(d)))
    }
}

/// Atoms of one slot, one per segment.
fn slot_atoms<R: Rng>(rng: &mut R, kind: SlotKind, segments: usize) -> Vec<Atom> {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    match kind {
        SlotKind::Rotation => (0..segments).map(|_| Atom::rotation(exact_turns(rng))).collect(),
        SlotKind::Loop => {
            let mut out: Vec<Atom> = (0..segments - 1).map(|_| Atom::rotation(exact_turns(rng))).collect();
            let so_far = out.iter().fold(Real::zero(), |acc, a| match a {
                Atom::Rotation { turns } => acc.add(turns),
                _ => acc,
            });
            let target = Real::int(rng.gen_range(-3..=3));
            out.push(Atom::rotation(target.sub(&so_far)));
            out
        }
        SlotKind::FloatRotation => {
            (0..segments).map(|_| Atom::rotation(Real::Float(rng.gen_range(-2.5..2.5)))).collect()
        }
        SlotKind::Hyperbolic => {
            (0..segments).map(|_| Atom::Hyperbolic { rate: sign * rng.gen_range(0.2..1.2) }).collect()
        }
        SlotKind::NegHyperbolic => {
            // Iterates alternate turns and stretches, so the elliptic window shrinks
            // like e^{-k rate}; keep k rate <= 20 for k <= 50 so sampling resolves it.
            let mut out = vec![Atom::rotation(Real::ratio(2 * rng.gen_range(-2..=2) + 1, 2))];
            out.extend((1..segments).map(|_| Atom::Hyperbolic { rate: sign * rng.gen_range(0.1..0.4) }));
            out
        }
        SlotKind::Shear => (0..segments).map(|_| Atom::Shear { a: sign * rng.gen_range(0.3..2.0) }).collect(),
    }
}

/// A slot-aligned ⋄-assembled path with the given slot kinds.
pub fn path_with<R: Rng>(rng: &mut R, kinds: &[SlotKind]) -> SymplecticPath {
    let segments = 2;
    let slots: Vec<Vec<Atom>> = kinds.iter().map(|&k| slot_atoms(rng, k, segments)).collect();
    let segs = (0..segments).map(|s| Segment::new(slots.iter().map(|a| a[s].clone()).collect())).collect();
    SymplecticPath::symbolic(segs).expect("generated path is valid")
}

/// Random path on up to three slots drawn from `kinds`.
pub fn random_path<R: Rng>(rng: &mut R, kinds: &[SlotKind]) -> SymplecticPath {
    let m = rng.gen_range(1..=3);
    let chosen: Vec<SlotKind> = (0..m).map(|_| kinds[rng.gen_range(0..kinds.len())]).collect();
    path_with(rng, &chosen)
}

/// Random path whose endpoint has eigenvalue `1`.
pub fn degenerate_path<R: Rng>(rng: &mut R) -> SymplecticPath {
    let m = rng.gen_range(1..=3);
    let mut kinds: Vec<SlotKind> = (0..m).map(|_| EXACT_KINDS[rng.gen_range(0..EXACT_KINDS.len())]).collect();
    let forced = rng.gen_range(0..m);
    kinds[forced] = if rng.gen_bool(0.5) { SlotKind::Loop } else { SlotKind::Shear };
    path_with(rng, &kinds)
}

/// A loop with `turns` full turns in every slot of a `2m`-dimensional layout.
pub fn loop_path(m: usize, turns: &[i64]) -> SymplecticPath {
    let atoms = (0..m).map(|j| Atom::rotation(Real::int(turns[j]))).collect();
    SymplecticPath::symbolic(vec![Segment::new(atoms)]).expect("loop is valid")
}

/// ⋄-sum of one to three rational rotations and `N1` blocks.
pub fn resonant_matrix<R: Rng>(rng: &mut R) -> SymplecticMatrix {
    let blocks = rng.gen_range(1..=3);
    let parts: Vec<SymplecticMatrix> = (0..blocks)
        .map(|_| {
            let b = match rng.gen_range(0..4) {
                0 | 1 => {
                    let q = rng.gen_range(2..=12);
                    BasicNormalForm::rotation(Real::ratio(rng.gen_range(1..q), q))
                }
                2 => BasicNormalForm::N1 { lambda: 1, a: [-1, 0, 1][rng.gen_range(0..3)] },
                _ => BasicNormalForm::N1 { lambda: -1, a: [-1, 0, 1][rng.gen_range(0..3)] },
            };
            make_normal_form(&b).expect("model block")
        })
        .collect();
    diamond_all(parts.iter())
}
