use crate::dsl::{Extrusion, Point2};
use crate::math::{rotation_xyz, Mat3, Vec3};

pub(crate) fn rotation_of(e: &Extrusion) -> Mat3 {
    let [t, p, r] = e.orientation;
    rotation_xyz(t, p, r)
}

/// Maps a sketch-local point lifted by `z_offset` along the sketch normal
/// into world space. The scale applies to the sketch only.
pub fn transform_point(p: Point2, e: &Extrusion, z_offset: f64) -> Vec3 {
    transform_with(&rotation_of(e), p, e, z_offset)
}

pub(crate) fn transform_with(rot: &Mat3, p: Point2, e: &Extrusion, z: f64) -> Vec3 {
    let local = Vec3::new(e.scale * p[0], e.scale * p[1], z);
    rot * local + Vec3::from(e.translation)
}

/// Inverse of [`transform_point`]: world point to `(sketch x, sketch y, z)`.
pub fn inverse_transform(q: &Vec3, e: &Extrusion) -> (Point2, f64) {
    inverse_with(&rotation_of(e), q, e)
}

pub(crate) fn inverse_with(rot: &Mat3, q: &Vec3, e: &Extrusion) -> (Point2, f64) {
    let l = rot.transpose() * (q - Vec3::from(e.translation));
    ([l.x / e.scale, l.y / e.scale], l.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn identity_is_identity() {
        let e = Extrusion::simple(0.0, 1.0);
        assert_eq!(transform_point([0.3, 0.7], &e, 0.0), Vec3::new(0.3, 0.7, 0.0));
    }

    #[test]
    fn scale_applies_to_sketch_only() {
        let mut e = Extrusion::simple(0.0, 1.0);
        e.scale = 2.0;
        assert_eq!(transform_point([1.0, 0.0], &e, 0.0), Vec3::new(2.0, 0.0, 0.0));
        e.scale = 3.0;
        e.orientation = [0.4, -0.3, 1.1];
        let a = transform_point([0.2, 0.2], &e, 0.0);
        let b = transform_point([0.2, 0.2], &e, 0.7);
        assert!(((b - a).norm() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let e = Extrusion {
                d_plus: 0.5,
                d_minus: -0.5,
                translation: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                orientation: [rng.random_range(-PI..PI), rng.random_range(-PI..PI), rng.random_range(-PI..PI)],
                scale: rng.random_range(0.1..2.0),
            };
            let p = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let z = rng.random_range(-1.0..1.0);
            let (back, bz) = inverse_transform(&transform_point(p, &e, z), &e);
            assert!((back[0] - p[0]).abs() < 1e-9 && (back[1] - p[1]).abs() < 1e-9 && (bz - z).abs() < 1e-9);
            let r = rotation_of(&e);
            assert!((r.transpose() * r - Mat3::identity()).norm() < 1e-9);
        }
    }
}
