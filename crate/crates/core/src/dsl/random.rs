//! Random valid sequences over the whole DSL, for round-trip and executor
//! checks.
//!
//! Sketch points lie on the coordinate grid of the default alphabet so that
//! loops stay closed and arcs stay curved after quantization; extrusion
//! parameters are continuous.

use super::tokens::{parse, tokenize, TokenAlphabet};
use super::{validate, BooleanOp, CadSequence, Curve, Extrusion, Face, Loop, ModelingStep, Point2, Sketch};
use rand::Rng;
use std::f64::consts::PI;

const ATTEMPTS: usize = 1000;

fn grid(alphabet: &TokenAlphabet, v: f64) -> f64 {
    let r = &alphabet.coord;
    let k = ((v - r.min) / r.bin_width()).round().clamp(0.0, (r.bins - 1) as f64);
    r.min + k * r.bin_width()
}

fn snap(alphabet: &TokenAlphabet, p: Point2) -> Point2 {
    [grid(alphabet, p[0]), grid(alphabet, p[1])]
}

/// Convex polygon around `c`, optionally with one edge bulged into an arc.
fn polygon_loop(rng: &mut impl Rng, alphabet: &TokenAlphabet, c: Point2, r: f64) -> Loop {
    let n = rng.random_range(3..=6);
    let phase = rng.random_range(0.0..2.0 * PI);
    let mut angles: Vec<f64> = (0..n).map(|i| phase + 2.0 * PI * (i as f64 + rng.random_range(-0.25..0.25)) / n as f64).collect();
    angles.sort_by(f64::total_cmp);
    let verts: Vec<Point2> = angles.iter().map(|a| snap(alphabet, [c[0] + r * a.cos(), c[1] + r * a.sin()])).collect();
    let mut curves: Vec<Curve> = (0..n).map(|i| Curve::line(verts[i], verts[(i + 1) % n])).collect();
    if rng.random_bool(0.5) {
        let i = rng.random_range(0..n);
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let (dx, dy) = (m[0] - c[0], m[1] - c[1]);
        let len = (dx * dx + dy * dy).sqrt().max(1e-9);
        let bulge = rng.random_range(0.3..0.6) * super::dist(a, b) / 2.0;
        let mid = snap(alphabet, [m[0] + dx / len * bulge, m[1] + dy / len * bulge]);
        curves[i] = Curve::arc(a, mid, b);
    }
    Loop::new(curves)
}

fn circle_loop(alphabet: &TokenAlphabet, c: Point2, r: f64) -> Loop {
    let c = snap(alphabet, c);
    let r = grid(alphabet, r).max(alphabet.coord.bin_width() * 2.0);
    Loop::circle(c, r)
}

fn random_face(rng: &mut impl Rng, alphabet: &TokenAlphabet, c: Point2, r: f64) -> Face {
    let outer = match rng.random_range(0..3) {
        0 => circle_loop(alphabet, c, r),
        1 => Loop::rectangle(snap(alphabet, [c[0] - r, c[1] - r * 0.7]), snap(alphabet, [c[0] + r, c[1] + r * 0.7])),
        _ => polygon_loop(rng, alphabet, c, r),
    };
    let inner = if rng.random_bool(0.3) {
        let ri = r * rng.random_range(0.2..0.35);
        vec![circle_loop(alphabet, c, ri)]
    } else {
        Vec::new()
    };
    Face::with_holes(outer, inner)
}

fn random_sketch(rng: &mut impl Rng, alphabet: &TokenAlphabet) -> Sketch {
    if rng.random_bool(0.2) {
        let (ra, rb) = (rng.random_range(0.12..0.2), rng.random_range(0.12..0.2));
        let a = random_face(rng, alphabet, [0.25, 0.5], ra);
        let b = random_face(rng, alphabet, [0.75, 0.5], rb);
        Sketch::new(vec![a, b])
    } else {
        let r = rng.random_range(0.2..0.45);
        Sketch::single(random_face(rng, alphabet, [0.5, 0.5], r))
    }
}

fn random_extrusion(rng: &mut impl Rng) -> Extrusion {
    let d_plus = rng.random_range(0.05..0.8);
    let d_minus = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(-0.5..0.0) };
    Extrusion {
        d_plus,
        d_minus,
        translation: std::array::from_fn(|_| rng.random_range(-0.5..0.5)),
        orientation: std::array::from_fn(|_| rng.random_range(-PI..PI)),
        scale: rng.random_range(0.4..1.6),
    }
}

/// Draws a tokenizable sequence of `steps` steps. The first step is a
/// union, later flags are random. Panics when no valid draw is found.
pub fn random_sequence(rng: &mut impl Rng, steps: usize) -> CadSequence {
    assert!(steps > 0, "steps must be positive");
    let alphabet = TokenAlphabet::default();
    let mut out = Vec::with_capacity(steps);
    while out.len() < steps {
        let step = (0..ATTEMPTS)
            .map(|_| ModelingStep {
                sketch: random_sketch(rng, &alphabet),
                extrusion: random_extrusion(rng),
                boolean: if out.is_empty() || rng.random_bool(0.6) { BooleanOp::Union } else { BooleanOp::Subtraction },
            })
            .find(|s| {
                let one = CadSequence::new(vec![ModelingStep { boolean: BooleanOp::Union, ..s.clone() }]);
                validate(&one).is_empty() && tokenize(&one, &alphabet).is_ok_and(|t| parse(&t, &alphabet).is_ok())
            })
            .expect("a valid step within the attempt budget");
        out.push(step);
    }
    CadSequence::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_are_valid_and_varied() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut arcs = 0;
        let mut subs = 0;
        for _ in 0..200 {
            let n = rng.random_range(1..=4);
            let s = random_sequence(&mut rng, n);
            assert_eq!(s.len(), n);
            assert!(validate(&s).is_empty());
            arcs += s.steps.iter().flat_map(|st| st.sketch.curves()).filter(|c| c.kind == super::super::CurveKind::Arc).count();
            subs += s.steps.iter().filter(|st| st.boolean == BooleanOp::Subtraction).count();
        }
        assert!(arcs > 20 && subs > 20, "{arcs} arcs, {subs} subtractions");
    }
}
