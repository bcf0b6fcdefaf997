//! Structural checks for sequences.

use super::planar::{
    discretize_curve, discretize_loop, point_in_polygon, polygon_self_intersects, polygons_touch, signed_area,
};
use super::{circumcircle, dist, CadSequence, Curve, CurveKind, Extrusion, Face, Loop, Point2};
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

/// Endpoint gap allowed when closing loops, 1.5 sketch coordinate bins.
pub const CLOSURE_TOLERANCE: f64 = 1.5 / 64.0;
const CHORD_TOLERANCE: f64 = 1.0 / 256.0;

/// Position of a violation; inner fields are `None` when not applicable.
/// Loop index 0 is the face's outer loop, inner loops follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Location {
    pub step: Option<usize>,
    pub face: Option<usize>,
    #[serde(rename = "loop")]
    pub loop_: Option<usize>,
    pub curve: Option<usize>,
}

impl Location {
    fn step(step: usize) -> Self {
        Location { step: Some(step), face: None, loop_: None, curve: None }
    }
    fn face(step: usize, face: usize) -> Self {
        Location { face: Some(face), ..Location::step(step) }
    }
    fn lp(step: usize, face: usize, lp: usize) -> Self {
        Location { loop_: Some(lp), ..Location::face(step, face) }
    }
    fn curve(step: usize, face: usize, lp: usize, curve: usize) -> Self {
        Location { curve: Some(curve), ..Location::lp(step, face, lp) }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = [("step", self.step), ("face", self.face), ("loop", self.loop_), ("curve", self.curve)];
        let s: Vec<String> = parts.iter().filter_map(|(n, v)| v.map(|v| format!("{n} {v}"))).collect();
        if s.is_empty() {
            f.write_str("sequence")
        } else {
            f.write_str(&s.join(", "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    EmptySequence,
    FirstStepSubtraction,
    EmptySketch,
    NonFinite,
    ZeroThickness { thickness: f64 },
    NonPositiveScale { scale: f64 },
    AngleOutOfRange { angle: f64 },
    WrongPointCount { expected: usize, found: usize },
    CollinearArc,
    InconsistentCircle,
    CircleNotAlone,
    EmptyLoop,
    OpenLoop { gap: f64 },
    DegenerateLoop,
    SelfIntersection,
    InnerOutsideOuter,
    LoopsCross { other: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub location: Location,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}", self.location, self.kind)
    }
}

/// Lists every broken invariant; an empty list means the sequence is valid.
pub fn validate(seq: &CadSequence) -> Vec<Violation> {
    let mut out = Vec::new();
    if seq.is_empty() {
        out.push(Violation {
            location: Location { step: None, face: None, loop_: None, curve: None },
            kind: ViolationKind::EmptySequence,
        });
        return out;
    }
    if seq.steps[0].boolean == super::BooleanOp::Subtraction {
        out.push(Violation { location: Location::step(0), kind: ViolationKind::FirstStepSubtraction });
    }
    for (si, step) in seq.steps.iter().enumerate() {
        check_extrusion(si, &step.extrusion, &mut out);
        if step.sketch.faces.is_empty() {
            out.push(Violation { location: Location::step(si), kind: ViolationKind::EmptySketch });
        }
        for (fi, face) in step.sketch.faces.iter().enumerate() {
            check_face(si, fi, face, &mut out);
        }
    }
    out
}

fn check_extrusion(si: usize, e: &Extrusion, out: &mut Vec<Violation>) {
    let loc = Location::step(si);
    let mut push = |kind| out.push(Violation { location: loc, kind });
    let all = [e.d_plus, e.d_minus, e.scale].into_iter().chain(e.translation).chain(e.orientation);
    if all.clone().any(|v| !v.is_finite()) {
        push(ViolationKind::NonFinite);
        return;
    }
    if e.thickness() <= 0.0 {
        push(ViolationKind::ZeroThickness { thickness: e.thickness() });
    }
    if e.scale <= 0.0 {
        push(ViolationKind::NonPositiveScale { scale: e.scale });
    }
    for a in e.orientation {
        if !(-PI..PI).contains(&a) {
            push(ViolationKind::AngleOutOfRange { angle: a });
        }
    }
}

fn check_face(si: usize, fi: usize, face: &Face, out: &mut Vec<Violation>) {
    let mut polys: Vec<Option<Vec<Point2>>> = Vec::new();
    for (li, lp) in face.loops().enumerate() {
        polys.push(check_loop(si, fi, li, lp, out));
    }
    let Some(outer) = &polys[0] else { return };
    for (li, inner) in polys.iter().enumerate().skip(1) {
        let Some(inner) = inner else { continue };
        let loc = Location::lp(si, fi, li);
        if polygons_touch(outer, inner) || !inner.iter().all(|p| point_in_polygon(*p, outer)) {
            out.push(Violation { location: loc, kind: ViolationKind::InnerOutsideOuter });
        }
        for (lj, other) in polys.iter().enumerate().skip(li + 1) {
            if let Some(other) = other {
                if polygons_touch(inner, other) {
                    out.push(Violation { location: loc, kind: ViolationKind::LoopsCross { other: lj } });
                }
            }
        }
    }
}

/// Checks one loop; returns its polygon when it is well formed.
fn check_loop(si: usize, fi: usize, li: usize, lp: &Loop, out: &mut Vec<Violation>) -> Option<Vec<Point2>> {
    let before = out.len();
    let loc = Location::lp(si, fi, li);
    if lp.curves.is_empty() {
        out.push(Violation { location: loc, kind: ViolationKind::EmptyLoop });
        return None;
    }
    for (ci, c) in lp.curves.iter().enumerate() {
        if let Some(kind) = check_curve(c) {
            out.push(Violation { location: Location::curve(si, fi, li, ci), kind });
        }
    }
    if out.len() > before {
        return None;
    }
    let has_circle = lp.curves.iter().any(|c| c.kind == CurveKind::Circle);
    if has_circle && lp.curves.len() > 1 {
        out.push(Violation { location: loc, kind: ViolationKind::CircleNotAlone });
        return None;
    }
    if !has_circle {
        let n = lp.curves.len();
        for ci in 0..n {
            let gap = dist(lp.curves[ci].end(), lp.curves[(ci + 1) % n].start());
            if gap > CLOSURE_TOLERANCE {
                out.push(Violation { location: Location::curve(si, fi, li, ci), kind: ViolationKind::OpenLoop { gap } });
            }
        }
        if out.len() > before {
            return None;
        }
    }
    let poly = discretize_loop(lp, CHORD_TOLERANCE).ok()?;
    if polygon_self_intersects(&poly) {
        out.push(Violation { location: loc, kind: ViolationKind::SelfIntersection });
        return None;
    }
    if poly.len() < 3 || signed_area(&poly).abs() < 1e-12 {
        out.push(Violation { location: loc, kind: ViolationKind::DegenerateLoop });
        return None;
    }
    Some(poly)
}

fn check_curve(c: &Curve) -> Option<ViolationKind> {
    let expected = c.kind.point_count();
    if c.points.len() != expected {
        return Some(ViolationKind::WrongPointCount { expected, found: c.points.len() });
    }
    if c.points.iter().flatten().any(|v| !v.is_finite()) {
        return Some(ViolationKind::NonFinite);
    }
    match c.kind {
        CurveKind::Line => None,
        CurveKind::Arc => circumcircle(c.points[0], c.points[1], c.points[2])
            .is_none()
            .then_some(ViolationKind::CollinearArc),
        CurveKind::Circle => (!circle_consistent(c)).then_some(ViolationKind::InconsistentCircle),
    }
    .or_else(|| discretize_curve(c, CHORD_TOLERANCE).err().map(|_| ViolationKind::InconsistentCircle))
}

/// Two diameters that share a midpoint, have equal length and are orthogonal,
/// each within the closure tolerance.
fn circle_consistent(c: &Curve) -> bool {
    let p = &c.points;
    let d1 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
    let d2 = [p[3][0] - p[1][0], p[3][1] - p[1][1]];
    let m1 = [(p[0][0] + p[2][0]) / 2.0, (p[0][1] + p[2][1]) / 2.0];
    let m2 = [(p[1][0] + p[3][0]) / 2.0, (p[1][1] + p[3][1]) / 2.0];
    let l1 = d1[0].hypot(d1[1]);
    let l2 = d2[0].hypot(d2[1]);
    let tol = CLOSURE_TOLERANCE;
    l1 > 0.0
        && l2 > 0.0
        && dist(m1, m2) <= tol
        && (l1 - l2).abs() <= 2.0 * tol
        && (d1[0] * d2[0] + d1[1] * d2[1]).abs() <= tol * (l1 + l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{BooleanOp, Extrusion, ModelingStep, Sketch};

    fn step(face: Face) -> ModelingStep {
        ModelingStep { sketch: Sketch::single(face), extrusion: Extrusion::simple(0.0, 1.0), boolean: BooleanOp::Union }
    }

    fn kinds(seq: &CadSequence) -> Vec<ViolationKind> {
        validate(seq).into_iter().map(|v| v.kind).collect()
    }

    #[test]
    fn unit_square_is_valid() {
        let seq = CadSequence::new(vec![step(Face::new(Loop::rectangle([0.0, 0.0], [1.0, 1.0])))]);
        assert!(validate(&seq).is_empty());
    }

    #[test]
    fn first_subtraction_is_one_violation() {
        let mut s = step(Face::new(Loop::rectangle([0.0, 0.0], [1.0, 1.0])));
        s.boolean = BooleanOp::Subtraction;
        let v = validate(&CadSequence::new(vec![s]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::FirstStepSubtraction);
        assert_eq!(v[0].location.step, Some(0));
    }

    #[test]
    fn collinear_arc_is_one_violation() {
        let lp = Loop::new(vec![
            Curve::arc([0.0, 0.0], [0.5, 0.0], [1.0, 0.0]),
            Curve::line([1.0, 0.0], [0.5, 1.0]),
            Curve::line([0.5, 1.0], [0.0, 0.0]),
        ]);
        let v = validate(&CadSequence::new(vec![step(Face::new(lp))]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::CollinearArc);
        assert_eq!(v[0].location.curve, Some(0));
    }

    #[test]
    fn open_single_segment_loop() {
        let lp = Loop::new(vec![Curve::line([0.0, 0.0], [1.0, 0.0])]);
        let k = kinds(&CadSequence::new(vec![step(Face::new(lp))]));
        assert!(matches!(k[..], [ViolationKind::OpenLoop { .. }]));
    }

    #[test]
    fn hole_checks() {
        let outer = Loop::rectangle([0.0, 0.0], [1.0, 1.0]);
        let good = Face::with_holes(outer.clone(), vec![Loop::circle([0.5, 0.5], 0.2)]);
        assert!(validate(&CadSequence::new(vec![step(good)])).is_empty());
        let outside = Face::with_holes(outer.clone(), vec![Loop::circle([0.95, 0.5], 0.2)]);
        assert_eq!(kinds(&CadSequence::new(vec![step(outside)])), vec![ViolationKind::InnerOutsideOuter]);
        let crossing = Face::with_holes(
            outer,
            vec![Loop::circle([0.4, 0.5], 0.2), Loop::circle([0.6, 0.5], 0.2)],
        );
        assert_eq!(kinds(&CadSequence::new(vec![step(crossing)])), vec![ViolationKind::LoopsCross { other: 2 }]);
    }

    #[test]
    fn extrusion_checks() {
        let mut s = step(Face::new(Loop::rectangle([0.0, 0.0], [1.0, 1.0])));
        s.extrusion.d_plus = 0.0;
        s.extrusion.scale = 0.0;
        s.extrusion.orientation[2] = PI;
        let k = kinds(&CadSequence::new(vec![s]));
        assert_eq!(k.len(), 3);
    }

    #[test]
    fn skewed_circle_is_inconsistent() {
        let c = Curve { kind: CurveKind::Circle, points: vec![[1.0, 0.0], [0.7, 0.7], [-1.0, 0.0], [0.0, -1.0]] };
        let k = kinds(&CadSequence::new(vec![step(Face::new(Loop::new(vec![c])))]));
        assert_eq!(k, vec![ViolationKind::InconsistentCircle]);
    }

    #[test]
    fn bowtie_self_intersects() {
        let lp = Loop::polygon(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        let k = kinds(&CadSequence::new(vec![step(Face::new(lp))]));
        assert_eq!(k, vec![ViolationKind::SelfIntersection]);
    }

    #[test]
    fn empty_sequence() {
        assert_eq!(kinds(&CadSequence::default()), vec![ViolationKind::EmptySequence]);
    }
}
