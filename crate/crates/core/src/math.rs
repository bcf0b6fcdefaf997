//! Small linear-algebra helpers shared across modules.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

pub fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

pub fn arr3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Wraps an angle into `[-pi, pi)`.
pub fn canonical_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = a - two_pi * ((a + PI) / two_pi).floor();
    if w >= PI {
        w - two_pi
    } else {
        w
    }
}

/// `R = Rz(rho) * Ry(phi) * Rx(theta)`.
pub fn rotation_xyz(theta: f64, phi: f64, rho: f64) -> Mat3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let (sr, cr) = rho.sin_cos();
    let rx = Mat3::new(1.0, 0.0, 0.0, 0.0, ct, -st, 0.0, st, ct);
    let ry = Mat3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
    let rz = Mat3::new(cr, -sr, 0.0, sr, cr, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

/// Inverse of [`rotation_xyz`]; returns canonical angles.
///
/// At gimbal lock (`|cos phi| ~ 0`) `rho` is fixed to zero.
pub fn euler_from_rotation(r: &Mat3) -> [f64; 3] {
    let cos_phi = (r[(0, 0)].powi(2) + r[(1, 0)].powi(2)).sqrt();
    let phi = (-r[(2, 0)]).atan2(cos_phi);
    let (theta, rho) = if cos_phi > 1e-9 {
        (r[(2, 1)].atan2(r[(2, 2)]), r[(1, 0)].atan2(r[(0, 0)]))
    } else if r[(2, 0)] < 0.0 {
        (r[(0, 1)].atan2(r[(0, 2)]), 0.0)
    } else {
        ((-r[(0, 1)]).atan2(-r[(0, 2)]), 0.0)
    };
    [canonical_angle(theta), canonical_angle(phi), canonical_angle(rho)]
}

/// In-plane frame for a plane normal: the first axis is the projection of
/// the world axis least parallel to the normal, the second is
/// `normal x first`. Returns `(u, v, n)` with `u x v = n`.
pub fn plane_frame(normal: &Vec3) -> (Vec3, Vec3, Vec3) {
    let n = normal.normalize();
    let mut axis = 0;
    for i in 1..3 {
        if n[i].abs() < n[axis].abs() {
            axis = i;
        }
    }
    let mut a = Vec3::zeros();
    a[axis] = 1.0;
    let u = (a - n * n.dot(&a)).normalize();
    let v = n.cross(&u);
    (u, v, n)
}

/// Mixes a base seed with a stream index (splitmix64 finalizer) so that
/// independent draws can be generated in any order.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Linear-interpolated percentile of an unsorted slice, `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    Some(v[lo] * (1.0 - t) + v[hi] * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn euler_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let a = [
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
            ];
            let r = rotation_xyz(a[0], a[1], a[2]);
            let b = euler_from_rotation(&r);
            let r2 = rotation_xyz(b[0], b[1], b[2]);
            assert!((r - r2).abs().max() < 1e-9);
        }
    }

    #[test]
    fn euler_round_trip_axis_aligned() {
        let q = [-PI, -PI / 2.0, 0.0, PI / 2.0];
        for &t in &q {
            for &p in &q {
                for &r in &q {
                    let m = rotation_xyz(t, p, r);
                    let e = euler_from_rotation(&m);
                    assert!((m - rotation_xyz(e[0], e[1], e[2])).abs().max() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn canonical_angle_range() {
        assert_eq!(canonical_angle(PI), -PI);
        assert!((canonical_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(canonical_angle(0.25), 0.25);
    }

    #[test]
    fn frame_is_right_handed() {
        for n in [Vec3::z(), -Vec3::x(), Vec3::new(1.0, 2.0, -0.5)] {
            let (u, v, nn) = plane_frame(&n);
            assert!((u.cross(&v) - nn).norm() < 1e-12);
            assert!(u.dot(&nn).abs() < 1e-12);
        }
        let (u, _, _) = plane_frame(&Vec3::z());
        assert_eq!(u, Vec3::x());
    }

    #[test]
    fn percentile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&v, 1.0), Some(4.0));
        assert_eq!(percentile(&v, 0.5), Some(2.5));
    }
}
