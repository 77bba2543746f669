use super::{winding, SlotKind, SymplecticPath};
use crate::error::{Error, Result};
use crate::exact::Real;
use crate::splitting::{splitting_table, SplitEntry, SplittingTable};
use crate::sp_core::{decompose_normal_form, BasicNormalForm, NormalFormDecomposition, SymplecticMatrix};
use crate::tol;

/// Mean index `mu-hat`. Slot-aligned rotation, hyperbolic and shear slots are
/// evaluated in closed form (exactly for exact angles); everything else by
/// adaptive winding of `rho`.
pub fn mean_index(p: &SymplecticPath) -> Result<Real> {
    let Some(slots) = p.slots() else {
        return Ok(Real::Float(winding(p)?));
    };
    let mut total = Real::zero();
    for (sub, kind) in &slots {
        let part = match kind {
            SlotKind::Rotation(t) => t.scale(2),
            SlotKind::Hyperbolic(_) | SlotKind::Shear(_) => Real::zero(),
            SlotKind::Numeric => Real::Float(winding(sub)?),
        };
        total = total.add(&part);
    }
    Ok(total)
}

/// Maslov index of a loop: half its mean index.
pub fn maslov_loop_index(p: &SymplecticPath) -> Result<i64> {
    let dev = p.endpoint().distance(&SymplecticMatrix::identity(p.dim()));
    if dev > 1e-8 {
        return Err(Error::NotALoop(dev));
    }
    let half = mean_index(p)?.div(&Real::int(2));
    half.snap_integer(tol::INTEGER_SNAP)
        .ok_or_else(|| Error::Consistency(format!("loop winding {} is not an even integer", half.scale(2))))
}

/// Endpoint decomposition, read off the slot structure when every slot is closed form.
pub(crate) fn endpoint_decomposition(p: &SymplecticPath) -> Result<NormalFormDecomposition> {
    let Some(slots) = p.slots() else {
        return decompose_normal_form(&p.endpoint());
    };
    let mut parts = Vec::with_capacity(slots.len());
    for (sub, kind) in &slots {
        let empty = SymplecticMatrix::identity(0);
        let d = match kind {
            SlotKind::Rotation(t) => {
                NormalFormDecomposition { blocks: vec![BasicNormalForm::rotation(*t)], rest: empty }
            }
            SlotKind::Hyperbolic(r) if *r != 0.0 => NormalFormDecomposition { blocks: vec![], rest: sub.endpoint() },
            SlotKind::Shear(a) if *a != 0.0 => NormalFormDecomposition {
                blocks: vec![BasicNormalForm::N1 { lambda: 1, a: a.signum() as i8 }],
                rest: empty,
            },
            SlotKind::Hyperbolic(_) | SlotKind::Shear(_) => {
                NormalFormDecomposition { blocks: vec![BasicNormalForm::N1 { lambda: 1, a: 0 }], rest: empty }
            }
            SlotKind::Numeric => decompose_normal_form(&sub.endpoint())?,
        };
        parts.push(d);
    }
    Ok(NormalFormDecomposition::join(&parts))
}

/// Indices of a path together with the endpoint data they were derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexReport {
    pub dim: usize,
    pub mean: Real,
    pub lower: i64,
    pub upper: i64,
    pub nullity: usize,
    pub splitting_at_one: (u32, u32),
    /// Per unit eigenangle in `(0, 2pi)`.
    pub circle_data: Vec<SplitEntry>,
    pub c: u32,
    pub dyn_convex: bool,
    pub table: SplittingTable,
    pub endpoint: NormalFormDecomposition,
}

impl IndexReport {
    pub fn half_dim(&self) -> usize {
        self.dim / 2
    }

    pub fn is_degenerate(&self) -> bool {
        self.nullity > 0
    }

    /// Assemble a report from a mean index and an endpoint decomposition.
    pub fn from_parts(dim: usize, mean: Real, endpoint: NormalFormDecomposition) -> Result<IndexReport> {
        let table = splitting_table(&endpoint);
        let (sp1, sm1) = table.at_one();
        let c = table.c();
        let raw = mean.sub(&Real::int(sp1 as i64)).add(&Real::int(c as i64)).sub(&table.weighted_minus());
        let lower = raw.snap_integer(tol::INTEGER_SNAP).ok_or_else(|| {
            Error::Consistency(format!("lower index {raw} is not an integer; Krein calibration or decomposition is off"))
        })?;
        let nullity = endpoint.nullity_at_one();
        let upper = lower + nullity as i64;
        let circle_data = table.circle().cloned().collect();
        Ok(IndexReport {
            dim,
            mean,
            lower,
            upper,
            nullity,
            splitting_at_one: (sp1, sm1),
            circle_data,
            c,
            dyn_convex: lower >= (dim / 2) as i64 + 2,
            table,
            endpoint,
        })
    }
}

/// Full index report: `mu-` from the mean index and splitting numbers, `mu+ = mu- + nu`.
pub fn index_report(p: &SymplecticPath) -> Result<IndexReport> {
    let endpoint = endpoint_decomposition(p)?;
    IndexReport::from_parts(p.dim(), mean_index(p)?, endpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{Atom, Segment};

    #[test]
    fn rotation_indices() {
        let cases = [(Real::ratio(3, 2), 3), (Real::ratio(-1, 4), -1), (Real::ratio(3, 4), 1), (Real::Float(0.35), 1), (Real::ratio(1, 4), 1)];
        for (t, mu) in cases {
            let r = index_report(&SymplecticPath::rotation(t)).unwrap();
            assert_eq!((r.lower, r.upper), (mu, mu), "turns {t}");
        }
    }

    #[test]
    fn shear_and_identity() {
        let p = SymplecticPath::from_atoms(vec![Atom::Shear { a: 1.0 }]).unwrap();
        let r = index_report(&p).unwrap();
        assert_eq!((r.lower, r.upper, r.nullity), (-1, 0, 1));
        assert_eq!(r.mean, Real::zero());
        let r = index_report(&SymplecticPath::constant(2)).unwrap();
        assert_eq!((r.lower, r.upper), (-1, 1));
        let r = index_report(&SymplecticPath::rotation(Real::int(1))).unwrap();
        assert_eq!((r.lower, r.upper), (1, 3));
    }

    #[test]
    fn loops() {
        assert_eq!(maslov_loop_index(&SymplecticPath::rotation(Real::int(1))).unwrap(), 1);
        assert_eq!(maslov_loop_index(&SymplecticPath::constant(4)).unwrap(), 0);
        let p = SymplecticPath::from_atoms(vec![Atom::rotation_angle(-4.0 * std::f64::consts::PI), Atom::rotation_angle(2.0 * std::f64::consts::PI)])
            .unwrap();
        assert_eq!(maslov_loop_index(&p).unwrap(), -1);
        assert!(matches!(maslov_loop_index(&SymplecticPath::rotation(Real::ratio(1, 3))), Err(Error::NotALoop(_))));
    }

    #[test]
    fn numeric_route_agrees() {
        let exact = SymplecticPath::rotation(Real::ratio(7, 10));
        let m = exact.endpoint();
        let twisted = SymplecticPath::symbolic(vec![
            Segment::new(vec![Atom::Hyperbolic { rate: 0.4 }]),
            Segment::new(vec![Atom::rotation(Real::ratio(7, 10))]),
            Segment::new(vec![Atom::Hyperbolic { rate: -0.4 }]),
        ])
        .unwrap();
        assert!(twisted.endpoint().distance(&m) > 1e-3);
        let r = index_report(&twisted).unwrap();
        assert!(matches!(r.mean, Real::Float(_)));
        let g = SymplecticPath::from_atoms(vec![Atom::generic(twisted.endpoint()).unwrap()]).unwrap();
        let rg = index_report(&g).unwrap();
        assert_eq!(r.lower, 1);
        assert_eq!(rg.lower, -1);
    }
}
