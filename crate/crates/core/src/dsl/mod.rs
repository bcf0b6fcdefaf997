//! Sketch-extrude sequence data model.
//!
//! A [`CadSequence`] is an ordered list of [`ModelingStep`]s. Each step
//! extrudes a [`Sketch`] (faces bounded by loops of lines, arcs and circles
//! in sketch-local coordinates) between two offsets along the sketch-plane
//! normal and combines the result with the previous state by union or
//! subtraction.

pub mod planar;
mod quant;
mod random;
mod tokens;
mod validate;

pub use quant::{dequantize, quantize, ParamRange, QuantizeError};
pub use random::random_sequence;
pub use tokens::{
    parse, parse_text, tokenize, ParseError, TokenAlphabet, TokenStream, TokenizeError, BOOL_SUBTRACTION,
    BOOL_UNION, COORD_OFFSET, END_CURVE, END_EXTRUDE, END_FACE, END_LOOP, END_SKETCH, EXTRUDE_OFFSET,
};
pub use validate::{validate, Location, Violation, ViolationKind, CLOSURE_TOLERANCE};

use serde::{Deserialize, Serialize};

pub type Point2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Line,
    Arc,
    Circle,
}

impl CurveKind {
    /// Number of defining points: start/end, start/mid/end, or the four
    /// ends of two orthogonal diameters.
    pub fn point_count(self) -> usize {
        match self {
            CurveKind::Line => 2,
            CurveKind::Arc => 3,
            CurveKind::Circle => 4,
        }
    }

    pub fn from_point_count(n: usize) -> Option<Self> {
        match n {
            2 => Some(CurveKind::Line),
            3 => Some(CurveKind::Arc),
            4 => Some(CurveKind::Circle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<Point2>,
}

impl Curve {
    pub fn line(a: Point2, b: Point2) -> Self {
        Curve { kind: CurveKind::Line, points: vec![a, b] }
    }

    pub fn arc(start: Point2, mid: Point2, end: Point2) -> Self {
        Curve { kind: CurveKind::Arc, points: vec![start, mid, end] }
    }

    /// Circle encoded by the ends of its horizontal and vertical diameters.
    pub fn circle(center: Point2, radius: f64) -> Self {
        let [cx, cy] = center;
        Curve {
            kind: CurveKind::Circle,
            points: vec![[cx + radius, cy], [cx, cy + radius], [cx - radius, cy], [cx, cy - radius]],
        }
    }

    pub fn start(&self) -> Point2 {
        self.points[0]
    }

    pub fn end(&self) -> Point2 {
        match self.kind {
            CurveKind::Circle => self.points[0],
            _ => *self.points.last().expect("curve has points"),
        }
    }

    /// Center and radius of a circle curve from its diameter endpoints.
    pub fn circle_params(&self) -> Option<(Point2, f64)> {
        if self.kind != CurveKind::Circle || self.points.len() != 4 {
            return None;
        }
        let p = &self.points;
        let c = [(p[0][0] + p[1][0] + p[2][0] + p[3][0]) / 4.0, (p[0][1] + p[1][1] + p[2][1] + p[3][1]) / 4.0];
        let r = p.iter().map(|q| dist(*q, c)).sum::<f64>() / 4.0;
        Some((c, r))
    }

    fn map_points(&self, f: &impl Fn(Point2) -> Point2) -> Curve {
        Curve { kind: self.kind, points: self.points.iter().map(|p| f(*p)).collect() }
    }
}

pub(crate) fn dist(a: Point2, b: Point2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Circumcircle of three points, `None` when (nearly) collinear.
pub fn circumcircle(a: Point2, b: Point2, c: Point2) -> Option<(Point2, f64)> {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    let scale = dist(a, b).max(dist(b, c)).max(dist(a, c));
    if scale == 0.0 || d.abs() <= 1e-9 * scale * scale {
        return None;
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    let center = [ux, uy];
    Some((center, dist(center, a)))
}

/// Closed path of curves. Serialized as a plain array of curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Loop {
    pub curves: Vec<Curve>,
}

impl Loop {
    pub fn new(curves: Vec<Curve>) -> Self {
        Loop { curves }
    }

    /// Closed polygon through the given vertices.
    pub fn polygon(vertices: &[Point2]) -> Self {
        let n = vertices.len();
        Loop::new((0..n).map(|i| Curve::line(vertices[i], vertices[(i + 1) % n])).collect())
    }

    pub fn rectangle(min: Point2, max: Point2) -> Self {
        Loop::polygon(&[min, [max[0], min[1]], max, [min[0], max[1]]])
    }

    pub fn circle(center: Point2, radius: f64) -> Self {
        Loop::new(vec![Curve::circle(center, radius)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub outer: Loop,
    #[serde(default)]
    pub inner: Vec<Loop>,
}

impl Face {
    pub fn new(outer: Loop) -> Self {
        Face { outer, inner: Vec::new() }
    }

    pub fn with_holes(outer: Loop, inner: Vec<Loop>) -> Self {
        Face { outer, inner }
    }

    pub fn loops(&self) -> impl Iterator<Item = &Loop> {
        std::iter::once(&self.outer).chain(self.inner.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sketch {
    pub faces: Vec<Face>,
}

impl Sketch {
    pub fn new(faces: Vec<Face>) -> Self {
        Sketch { faces }
    }

    pub fn single(face: Face) -> Self {
        Sketch { faces: vec![face] }
    }

    /// Applies `f` to every defining point.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Sketch {
        let map_loop = |l: &Loop| Loop::new(l.curves.iter().map(|c| c.map_points(&f)).collect());
        Sketch {
            faces: self
                .faces
                .iter()
                .map(|fc| Face { outer: map_loop(&fc.outer), inner: fc.inner.iter().map(map_loop).collect() })
                .collect(),
        }
    }

    pub fn curves(&self) -> impl Iterator<Item = &Curve> {
        self.faces.iter().flat_map(|f| f.loops()).flat_map(|l| l.curves.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrusion {
    /// Extent along the sketch-plane normal.
    pub d_plus: f64,
    /// Extent opposite the normal, stored signed (usually `<= 0`).
    pub d_minus: f64,
    pub translation: [f64; 3],
    /// Euler angles `[theta, phi, rho]` composed as `Rz(rho) Ry(phi) Rx(theta)`.
    pub orientation: [f64; 3],
    /// Sketch scale; applies to the sketch only, not to the extrusion extents.
    pub scale: f64,
}

impl Extrusion {
    /// Identity placement extruded from `d_minus` to `d_plus`.
    pub fn simple(d_minus: f64, d_plus: f64) -> Self {
        Extrusion { d_plus, d_minus, translation: [0.0; 3], orientation: [0.0; 3], scale: 1.0 }
    }

    pub fn thickness(&self) -> f64 {
        self.d_plus - self.d_minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BooleanOp {
    Union,
    Subtraction,
}

impl BooleanOp {
    pub fn token(self) -> u32 {
        match self {
            BooleanOp::Union => 1,
            BooleanOp::Subtraction => 0,
        }
    }

    pub fn from_token(t: u32) -> Option<Self> {
        match t {
            1 => Some(BooleanOp::Union),
            0 => Some(BooleanOp::Subtraction),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelingStep {
    pub sketch: Sketch,
    pub extrusion: Extrusion,
    pub boolean: BooleanOp,
}

impl ModelingStep {
    /// Axis-aligned box extruded along +z from `min[2]` to `max[2]`.
    pub fn axis_box(min: [f64; 3], max: [f64; 3], boolean: BooleanOp) -> Self {
        let (sx, sy) = (max[0] - min[0], max[1] - min[1]);
        let s = sx.max(sy);
        ModelingStep {
            sketch: Sketch::single(Face::new(Loop::rectangle([0.0, 0.0], [sx / s, sy / s]))),
            extrusion: Extrusion {
                d_plus: max[2] - min[2],
                d_minus: 0.0,
                translation: min,
                orientation: [0.0; 3],
                scale: s,
            },
            boolean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CadSequence {
    pub steps: Vec<ModelingStep>,
}

impl CadSequence {
    pub fn new(steps: Vec<ModelingStep>) -> Self {
        CadSequence { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The first `n` steps.
    pub fn prefix(&self, n: usize) -> CadSequence {
        CadSequence { steps: self.steps[..n.min(self.steps.len())].to_vec() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Applies the world similarity `x -> scale * x + offset` to every step.
    pub fn transformed(&self, scale: f64, offset: [f64; 3]) -> CadSequence {
        let steps = self
            .steps
            .iter()
            .map(|s| {
                let e = &s.extrusion;
                let t = e.translation;
                ModelingStep {
                    sketch: s.sketch.clone(),
                    extrusion: Extrusion {
                        d_plus: e.d_plus * scale,
                        d_minus: e.d_minus * scale,
                        translation: [t[0] * scale + offset[0], t[1] * scale + offset[1], t[2] * scale + offset[2]],
                        orientation: e.orientation,
                        scale: e.scale * scale,
                    },
                    boolean: s.boolean,
                }
            })
            .collect();
        CadSequence { steps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_layout_matches_documented_schema() {
        let seq = CadSequence::new(vec![ModelingStep {
            sketch: Sketch::single(Face::new(Loop::rectangle([0.0, 0.0], [1.0, 1.0]))),
            extrusion: Extrusion::simple(0.0, 1.0),
            boolean: BooleanOp::Union,
        }]);
        let v: serde_json::Value = serde_json::from_str(&seq.to_json()).unwrap();
        assert_eq!(v["steps"][0]["boolean"], "union");
        assert_eq!(v["steps"][0]["sketch"]["faces"][0]["outer"][0]["kind"], "line");
        assert_eq!(v["steps"][0]["sketch"]["faces"][0]["outer"][0]["points"][1][0], 1.0);
        assert!(v["steps"][0]["sketch"]["faces"][0]["inner"].as_array().unwrap().is_empty());
        assert_eq!(v["steps"][0]["extrusion"]["translation"].as_array().unwrap().len(), 3);
        assert_eq!(CadSequence::from_json(&seq.to_json()).unwrap(), seq);
    }

    #[test]
    fn circumcircle_of_semicircle() {
        let (c, r) = circumcircle([0.0, 0.0], [1.0, 1.0], [2.0, 0.0]).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
        assert!(circumcircle([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]).is_none());
    }

    #[test]
    fn circle_params_from_diameters() {
        let c = Curve::circle([0.0, 0.0], 1.0);
        assert_eq!(c.points, vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]);
        let (ctr, r) = c.circle_params().unwrap();
        assert_eq!(ctr, [0.0, 0.0]);
        assert_eq!(r, 1.0);
    }
}
