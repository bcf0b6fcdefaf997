//! Random sketch-extrude models for tests and benchmarks.

use crate::cloud::PointCloud;
use crate::dsl::{tokenize, BooleanOp, CadSequence, Extrusion, Face, Loop, ModelingStep, Sketch, TokenAlphabet};
use crate::geometry::{sample_surface, Solid};
use crate::math::{derive_seed, euler_from_rotation, rotation_xyz, Mat3, Vec3};
use crate::metrics::UnitBox;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MARGIN: f64 = 0.06;

#[derive(Clone, Copy)]
enum Footprint {
    Rect { w: f64, d: f64 },
    Disc { r: f64 },
}

/// Axis-aligned 2D region occupied on the base's top face.
#[derive(Clone, Copy)]
struct Region {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Region {
    fn overlaps(&self, o: &Region, gap: f64) -> bool {
        (0..2).all(|k| self.lo[k] - gap < o.hi[k] && o.lo[k] - gap < self.hi[k])
    }
}

fn circle_step(c: [f64; 2], r: f64, z0: f64, z1: f64, op: BooleanOp) -> ModelingStep {
    ModelingStep {
        sketch: Sketch::single(Face::new(Loop::circle([0.5, 0.5], 0.5))),
        extrusion: Extrusion {
            d_plus: z1 - z0,
            d_minus: 0.0,
            translation: [c[0] - r, c[1] - r, z0],
            orientation: [0.0; 3],
            scale: 2.0 * r,
        },
        boolean: op,
    }
}

fn rect_step(lo: [f64; 2], hi: [f64; 2], z0: f64, z1: f64, op: BooleanOp) -> ModelingStep {
    ModelingStep::axis_box([lo[0], lo[1], z0], [hi[0], hi[1], z1], op)
}

struct Base {
    step: ModelingStep,
    height: f64,
    footprint: Footprint,
    blocked: Vec<Region>,
}

fn base(rng: &mut ChaCha8Rng) -> Base {
    let height = rng.random_range(0.25..0.6);
    match rng.random_range(0..3) {
        0 => {
            let (w, d): (f64, f64) = (rng.random_range(0.6..1.0), rng.random_range(0.6..1.0));
            Base { step: rect_step([0.0; 2], [w, d], 0.0, height, BooleanOp::Union), height, footprint: Footprint::Rect { w, d }, blocked: vec![] }
        }
        1 => {
            let r = rng.random_range(0.3..0.5);
            Base { step: circle_step([r, r], r, 0.0, height, BooleanOp::Union), height, footprint: Footprint::Disc { r }, blocked: vec![] }
        }
        _ => {
            let (w, d): (f64, f64) = (rng.random_range(0.6..1.0), rng.random_range(0.6..1.0));
            let hr: f64 = rng.random_range(0.12..0.18);
            let c = [rng.random_range(hr + 0.1..w - hr - 0.1), rng.random_range(hr + 0.1..d - hr - 0.1)];
            let s = w.max(d);
            let face = Face::with_holes(Loop::rectangle([0.0, 0.0], [w / s, d / s]), vec![Loop::circle([c[0] / s, c[1] / s], hr / s)]);
            let step = ModelingStep {
                sketch: Sketch::single(face),
                extrusion: Extrusion { d_plus: height, d_minus: 0.0, translation: [0.0; 3], orientation: [0.0; 3], scale: s },
                boolean: BooleanOp::Union,
            };
            let hole = Region { lo: [c[0] - hr, c[1] - hr], hi: [c[0] + hr, c[1] + hr] };
            Base { step, height, footprint: Footprint::Rect { w, d }, blocked: vec![hole] }
        }
    }
}

fn inside(fp: Footprint, r: &Region) -> bool {
    match fp {
        Footprint::Rect { w, d } => r.lo[0] >= MARGIN && r.lo[1] >= MARGIN && r.hi[0] <= w - MARGIN && r.hi[1] <= d - MARGIN,
        Footprint::Disc { r: rad } => {
            let corners = [[r.lo[0], r.lo[1]], [r.hi[0], r.lo[1]], [r.hi[0], r.hi[1]], [r.lo[0], r.hi[1]]];
            corners.iter().all(|c| ((c[0] - rad).powi(2) + (c[1] - rad).powi(2)).sqrt() <= rad - MARGIN)
        }
    }
}

fn feature(rng: &mut ChaCha8Rng, b: &mut Base) -> Option<ModelingStep> {
    let op = if rng.random_bool(0.5) { BooleanOp::Union } else { BooleanOp::Subtraction };
    let (hw, hd, round) = if rng.random_bool(0.5) {
        let r = rng.random_range(0.15..0.22);
        (r, r, true)
    } else {
        (rng.random_range(0.15..0.22), rng.random_range(0.15..0.22), false)
    };
    let span = match b.footprint {
        Footprint::Rect { w, d } => [w, d],
        Footprint::Disc { r } => [2.0 * r, 2.0 * r],
    };
    for _ in 0..64 {
        let c = [rng.random_range(0.0..span[0]), rng.random_range(0.0..span[1])];
        let region = Region { lo: [c[0] - hw, c[1] - hd], hi: [c[0] + hw, c[1] + hd] };
        if !inside(b.footprint, &region) || b.blocked.iter().any(|o| o.overlaps(&region, MARGIN)) {
            continue;
        }
        b.blocked.push(region);
        let h = b.height;
        let (z0, z1) = match op {
            BooleanOp::Union => (h, h + rng.random_range(0.15..0.3)),
            BooleanOp::Subtraction => (h - rng.random_range(0.45..0.75) * h, h + 0.02),
        };
        return Some(if round { circle_step(c, hw, z0, z1, op) } else { rect_step(region.lo, region.hi, z0, z1, op) });
    }
    None
}

/// Random proper rotation mapping coordinate axes to coordinate axes.
fn axis_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let mut perm = [0usize, 1, 2];
    perm.shuffle(rng);
    let mut q = Mat3::zeros();
    for (row, &col) in perm.iter().enumerate() {
        q[(row, col)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    if q.determinant() < 0.0 {
        q[(0, perm[0])] *= -1.0;
    }
    q
}

fn rotate(seq: &CadSequence, q: &Mat3) -> CadSequence {
    let steps = seq
        .steps
        .iter()
        .map(|s| {
            let mut s = s.clone();
            let [t, p, r] = s.extrusion.orientation;
            s.extrusion.orientation = euler_from_rotation(&(q * rotation_xyz(t, p, r)));
            let tr = q * Vec3::from(s.extrusion.translation);
            s.extrusion.translation = [tr.x, tr.y, tr.z];
            s
        })
        .collect();
    CadSequence::new(steps)
}

fn attempt(rng: &mut ChaCha8Rng, steps: usize) -> Option<CadSequence> {
    let mut b = base(rng);
    let mut seq = vec![b.step.clone()];
    while seq.len() < steps {
        seq.push(feature(rng, &mut b)?);
    }
    let rotated = rotate(&CadSequence::new(seq), &axis_rotation(rng));
    let (lo, hi) = Solid::from_sequence(&rotated).ok()?.hull();
    let unit = UnitBox::fit(&lo, &hi).ok()?;
    Some(rotated.transformed(unit.scale, unit.offset))
}

/// Random valid model of `steps` steps (1 to 4) in the unit box and its
/// surface sample of `n_points` points with normals.
///
/// The first step is a box, a cylinder or a plate with a round hole; later
/// steps are bosses or blind pockets on its top face. The whole
/// model is then turned by a random axis-aligned rotation.
pub fn generate_synthetic(seed: u64, steps: usize, n_points: usize) -> (CadSequence, PointCloud) {
    assert!((1..=4).contains(&steps), "steps must be in 1..=4");
    let alphabet = TokenAlphabet::default();
    for k in 0.. {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k));
        let Some(seq) = attempt(&mut rng, steps) else { continue };
        if tokenize(&seq, &alphabet).is_err() {
            continue;
        }
        let Ok(solid) = Solid::from_sequence(&seq) else { continue };
        if let Ok(pc) = sample_surface(&solid, n_points, derive_seed(seed, u64::MAX)) {
            return (seq, pc);
        }
    }
    unreachable!("generator loop is unbounded")
}
