use super::cylinder::ExtrusionCylinder;
use super::{GeometryError, Solid};
use crate::cloud::PointCloud;
use crate::dsl::Point2;
use crate::math::Vec3;
use crate::par;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Offset used for the boundary test, relative to the solid's extent.
pub const SAMPLE_EPSILON: f64 = 1e-3;
const MAX_ROUNDS: u64 = 24;
const CAP_TRIES: usize = 64;

#[derive(Debug, Clone, Copy)]
enum Patch {
    Cap { cyl: usize, z: f64, sign: f64 },
    Wall { cyl: usize, a: Point2, b: Point2, outward: Point2 },
}

impl Patch {
    fn cyl(&self) -> usize {
        match *self {
            Patch::Cap { cyl, .. } | Patch::Wall { cyl, .. } => cyl,
        }
    }
}

fn patches(solid: &Solid) -> (Vec<Patch>, Vec<f64>) {
    let mut out = Vec::new();
    let mut areas = Vec::new();
    for (ci, c) in solid.cylinders.iter().enumerate() {
        let (lo, hi) = c.z_range();
        let s = c.extrusion.scale;
        let cap = c.sketch.area() * s * s;
        out.push(Patch::Cap { cyl: ci, z: lo, sign: -1.0 });
        areas.push(cap);
        out.push(Patch::Cap { cyl: ci, z: hi, sign: 1.0 });
        areas.push(cap);
        let (blo, bhi) = c.sketch.bounds();
        let delta = 1e-7 * (bhi[0] - blo[0]).max(bhi[1] - blo[1]);
        for (a, b) in c.sketch.edges() {
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = dx.hypot(dy);
            if len == 0.0 {
                continue;
            }
            let n = [dy / len, -dx / len];
            let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let plus = c.sketch.contains([m[0] + delta * n[0], m[1] + delta * n[1]]);
            let minus = c.sketch.contains([m[0] - delta * n[0], m[1] - delta * n[1]]);
            let outward = match (plus, minus) {
                (false, true) => n,
                (true, false) => [-n[0], -n[1]],
                _ => continue,
            };
            out.push(Patch::Wall { cyl: ci, a, b, outward });
            areas.push(len * s * (hi - lo));
        }
    }
    let mut acc = 0.0;
    let cumulative = areas
        .iter()
        .map(|a| {
            acc += a;
            acc
        })
        .collect();
    (out, cumulative)
}

fn draw(patch: &Patch, c: &ExtrusionCylinder, rng: &mut ChaCha8Rng) -> Option<(Vec3, Vec3)> {
    match *patch {
        Patch::Cap { z, sign, .. } => {
            let (lo, hi) = c.sketch.bounds();
            for _ in 0..CAP_TRIES {
                let p = [rng.random_range(lo[0]..=hi[0]), rng.random_range(lo[1]..=hi[1])];
                if c.contains_local(p, z) {
                    return Some((c.to_world(p, z), c.normal() * sign));
                }
            }
            None
        }
        Patch::Wall { a, b, outward, .. } => {
            let t: f64 = rng.random();
            let (zlo, zhi) = c.z_range();
            let z = rng.random_range(zlo..=zhi);
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let n = c.rotation * Vec3::new(outward[0], outward[1], 0.0);
            Some((c.to_world(p, z), n))
        }
    }
}

/// Keeps a candidate on the final boundary with its normal pointing out of
/// the solid. A surface shared by several cylinders is owned by the
/// lowest-index one.
fn classify(solid: &Solid, owner: usize, q: &Vec3, n: &Vec3, eps: f64) -> Option<Vec3> {
    let plus = q + n * eps;
    let minus = q - n * eps;
    let (op, om) = (solid.occupancy(&plus), solid.occupancy(&minus));
    if op == om {
        return None;
    }
    if solid.cylinders[..owner].iter().any(|c| c.contains(&plus) != c.contains(&minus)) {
        return None;
    }
    Some(if om { *n } else { -n })
}

/// Draws exactly `n` area-uniform points on the solid's boundary.
pub fn sample_surface(solid: &Solid, n: usize, seed: u64) -> Result<PointCloud, GeometryError> {
    if solid.is_empty() {
        return Err(GeometryError::EmptySolid);
    }
    let (patches, cumulative) = patches(solid);
    let total = *cumulative.last().unwrap_or(&0.0);
    if total <= 0.0 {
        return Err(GeometryError::EmptySolid);
    }
    let eps = SAMPLE_EPSILON * solid.extent().max(1e-9);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut drawn = 0usize;
    let mut batch = (2 * n).max(64);
    for round in 0..MAX_ROUNDS {
        if points.len() >= n {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round);
        let candidates: Vec<(usize, Vec3, Vec3)> = (0..batch)
            .filter_map(|_| {
                let r = rng.random::<f64>() * total;
                let pi = cumulative.partition_point(|&c| c <= r).min(patches.len() - 1);
                let p = &patches[pi];
                draw(p, &solid.cylinders[p.cyl()], &mut rng).map(|(q, nrm)| (p.cyl(), q, nrm))
            })
            .collect();
        drawn += batch;
        let kept = par::map(&candidates, |(owner, q, nrm)| classify(solid, *owner, q, nrm, eps).map(|o| (*q, o)));
        for (q, o) in kept.into_iter().flatten() {
            if points.len() == n {
                break;
            }
            points.push(q);
            normals.push(o);
        }
        let rate = (points.len() as f64 / drawn as f64).max(1.0 / 64.0);
        batch = (((n - points.len()) as f64 / rate) * 1.25).ceil() as usize + 64;
    }
    if points.is_empty() {
        return Err(GeometryError::EmptySolid);
    }
    if points.len() < n {
        return Err(GeometryError::Undersampled { got: points.len(), wanted: n });
    }
    Ok(PointCloud::with_normals(points, normals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{BooleanOp, CadSequence, Extrusion, Face, Loop, ModelingStep, Sketch};

    fn cube() -> ModelingStep {
        ModelingStep::axis_box([0.0; 3], [1.0; 3], BooleanOp::Union)
    }

    #[test]
    fn cube_faces_get_equal_share() {
        let s = Solid::from_sequence(&CadSequence::new(vec![cube()])).unwrap();
        let pc = sample_surface(&s, 6000, 7).unwrap();
        assert_eq!(pc.len(), 6000);
        let normals = pc.normals.as_ref().unwrap();
        let mut counts = [0usize; 6];
        for (p, n) in pc.points.iter().zip(normals) {
            let k = (0..3).max_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
            let face = 2 * k + usize::from(n[k] > 0.0);
            counts[face] += 1;
            let expect = if n[k] > 0.0 { 1.0 } else { 0.0 };
            assert!((p[k] - expect).abs() < 1e-9);
        }
        for c in counts {
            assert!((900..=1100).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn through_hole_wall_is_sampled_and_inside_is_not() {
        let hole = ModelingStep {
            sketch: Sketch::single(Face::new(Loop::circle([0.5, 0.5], 0.25))),
            extrusion: Extrusion::simple(-0.5, 1.5),
            boolean: BooleanOp::Subtraction,
        };
        let s = Solid::from_sequence(&CadSequence::new(vec![cube(), hole])).unwrap();
        let pc = sample_surface(&s, 4000, 1).unwrap();
        let mut on_wall = 0;
        for p in &pc.points {
            let r = ((p.x - 0.5).powi(2) + (p.y - 0.5).powi(2)).sqrt();
            assert!(r > 0.25 - 1.0 / 256.0, "sample inside removed volume at {p:?}");
            if r < 0.25 + 1.0 / 256.0 {
                on_wall += 1;
            }
        }
        assert!(on_wall > 100);
    }

    #[test]
    fn same_seed_same_points() {
        let s = Solid::from_sequence(&CadSequence::new(vec![cube()])).unwrap();
        let a = sample_surface(&s, 500, 11).unwrap();
        let b = sample_surface(&s, 500, 11).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn fully_subtracted_is_empty() {
        let big = ModelingStep::axis_box([-1.0; 3], [2.0; 3], BooleanOp::Subtraction);
        let s = Solid::from_sequence(&CadSequence::new(vec![cube(), big])).unwrap();
        assert_eq!(sample_surface(&s, 100, 0), Err(GeometryError::EmptySolid));
    }

    #[test]
    fn coplanar_union_faces_are_not_doubled() {
        let a = ModelingStep::axis_box([0.0; 3], [0.5, 1.0, 1.0], BooleanOp::Union);
        let b = ModelingStep::axis_box([0.5, 0.0, 0.0], [1.0, 1.0, 1.0], BooleanOp::Union);
        let s = Solid::from_sequence(&CadSequence::new(vec![a, b])).unwrap();
        let pc = sample_surface(&s, 6000, 3).unwrap();
        let top = pc.points.iter().filter(|p| (p.z - 1.0).abs() < 1e-9).count();
        assert!((900..=1100).contains(&top), "{top}");
        assert!(pc.points.iter().all(|p| (p.x - 0.5).abs() > 1e-9 || p.z.abs() < 1e-9 || (p.z - 1.0).abs() < 1e-9 || p.y.abs() < 1e-9 || (p.y - 1.0).abs() < 1e-9));
    }
}
