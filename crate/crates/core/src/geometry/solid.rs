use super::bbox::{bbox_of_cylinder, Bbox3};
use super::cylinder::ExtrusionCylinder;
use super::{GeometryError, CHORD_TOLERANCE};
use crate::dsl::{validate, BooleanOp, CadSequence};
use crate::math::Vec3;
use crate::par;

/// Executed sequence: cylinders folded in order by their Boolean flags.
#[derive(Debug, Clone)]
pub struct Solid {
    pub cylinders: Vec<ExtrusionCylinder>,
    pub ops: Vec<BooleanOp>,
}

impl Solid {
    /// Validates and executes a sequence.
    pub fn from_sequence(seq: &CadSequence) -> Result<Solid, GeometryError> {
        Self::with_chord_tolerance(seq, CHORD_TOLERANCE)
    }

    pub fn with_chord_tolerance(seq: &CadSequence, chord_tol: f64) -> Result<Solid, GeometryError> {
        let violations = validate(seq);
        if !violations.is_empty() {
            return Err(GeometryError::Invalid(violations));
        }
        let cylinders = seq
            .steps
            .iter()
            .map(|s| ExtrusionCylinder::new(&s.sketch, &s.extrusion, chord_tol))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Solid { cylinders, ops: seq.steps.iter().map(|s| s.boolean).collect() })
    }

    pub fn len(&self) -> usize {
        self.cylinders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }

    pub fn occupancy(&self, q: &Vec3) -> bool {
        let mut occ = false;
        for (c, op) in self.cylinders.iter().zip(&self.ops) {
            match op {
                BooleanOp::Union => occ = occ || c.contains(q),
                BooleanOp::Subtraction => occ = occ && !c.contains(q),
            }
        }
        occ
    }

    pub fn occupancy_batch(&self, qs: &[Vec3]) -> Vec<bool> {
        par::map(qs, |q| self.occupancy(q))
    }

    pub fn bbox(&self, i: usize) -> Bbox3 {
        bbox_of_cylinder(&self.cylinders[i])
    }

    /// Axis-aligned box containing every occupied point.
    pub fn hull(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for (i, op) in self.ops.iter().enumerate() {
            if *op == BooleanOp::Union {
                let b = self.bbox(i);
                lo = lo.inf(&b.min);
                hi = hi.sup(&b.max);
            }
        }
        (lo, hi)
    }

    /// Longest hull side.
    pub fn extent(&self) -> f64 {
        let (lo, hi) = self.hull();
        (hi - lo).max()
    }
}
