use super::Plane;
use crate::cloud::PointCloud;
use crate::math::{arr3, derive_seed, Mat3, Vec3};
use crate::par;
use crate::spatial::KdTree;
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    /// Inlier distance threshold.
    pub t: f64,
    /// Minimum inliers for a plane to be accepted.
    pub d: usize,
    pub max_planes: usize,
    /// Hypotheses per plane.
    pub iterations: usize,
    /// Stop early once a hypothesis explains this fraction of remaining points.
    pub early_exit: f64,
    /// The second and third sample points are drawn within this radius of the first.
    pub local_radius: f64,
    pub refine_rounds: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            t: 1e-3,
            d: 128,
            max_planes: 8,
            iterations: 1000,
            early_exit: 0.5,
            local_radius: 0.1,
            refine_rounds: 3,
        }
    }
}

const CHUNK: usize = 50;

/// Least-squares plane through points: unit normal and offset.
pub fn fit_plane(points: &[Vec3]) -> Option<(Vec3, f64)> {
    if points.len() < 3 {
        return None;
    }
    let c = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    let n = canonical(eig.eigenvectors.column(k).normalize());
    Some((n, n.dot(&c)))
}

/// Flips a normal so its largest-magnitude component is positive.
fn canonical(n: Vec3) -> Vec3 {
    let k = n.iamax();
    if n[k] < 0.0 {
        -n
    } else {
        n
    }
}

fn hypothesis(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<(Vec3, f64)> {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    if len < 1e-12 {
        return None;
    }
    let n = n / len;
    Some((n, n.dot(a)))
}

fn count_inliers(points: &[Vec3], n: &Vec3, off: f64, t: f64) -> usize {
    points.iter().filter(|p| (n.dot(p) - off).abs() <= t).count()
}

/// Sequential RANSAC. Planes are returned in descending inlier order and
/// their inlier sets are disjoint.
pub fn detect_planes(cloud: &PointCloud, cfg: &RansacConfig, seed: u64) -> Vec<Plane> {
    let pts = &cloud.points;
    let mut remaining: Vec<usize> = (0..pts.len()).collect();
    let mut planes = Vec::new();
    while planes.len() < cfg.max_planes && remaining.len() >= cfg.d.max(3) {
        let sub: Vec<Vec3> = remaining.iter().map(|&i| pts[i]).collect();
        let tree = KdTree::new(&sub);
        let round = planes.len() as u64;
        let mut best: Option<(usize, Vec3, f64)> = None;
        let mut start = 0;
        while start < cfg.iterations {
            let end = (start + CHUNK).min(cfg.iterations);
            let scored = par::map_range(end - start, |h| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(seed, round), (start + h) as u64));
                let (a, b, c) = draw_triple(&sub, &tree, cfg.local_radius, &mut rng)?;
                let (n, off) = hypothesis(&sub[a], &sub[b], &sub[c])?;
                Some((count_inliers(&sub, &n, off, cfg.t), n, off))
            });
            for (cnt, n, off) in scored.into_iter().flatten() {
                if best.as_ref().is_none_or(|b| cnt > b.0) {
                    best = Some((cnt, n, off));
                }
            }
            start = end;
            if best.as_ref().is_some_and(|b| b.0 as f64 > cfg.early_exit * sub.len() as f64) {
                break;
            }
        }
        let Some((_, mut n, mut off)) = best else { break };
        let mut inliers: Vec<usize> = (0..sub.len()).filter(|&i| (n.dot(&sub[i]) - off).abs() <= cfg.t).collect();
        for _ in 0..cfg.refine_rounds {
            let support: Vec<Vec3> = inliers.iter().map(|&i| sub[i]).collect();
            let Some((rn, roff)) = fit_plane(&support) else { break };
            let refit: Vec<usize> = (0..sub.len()).filter(|&i| (rn.dot(&sub[i]) - roff).abs() <= cfg.t).collect();
            if refit.len() < inliers.len() {
                break;
            }
            n = rn;
            off = roff;
            inliers = refit;
        }
        if inliers.len() < cfg.d {
            break;
        }
        let n_can = canonical(n);
        if n_can != n {
            off = -off;
        }
        let global: Vec<usize> = inliers.iter().map(|&i| remaining[i]).collect();
        let taken: std::collections::HashSet<usize> = inliers.iter().copied().collect();
        remaining = remaining.iter().enumerate().filter(|(i, _)| !taken.contains(i)).map(|(_, &g)| g).collect();
        planes.push(Plane { normal: arr3(&n_can), offset: off, inlier_count: global.len(), inliers: global });
    }
    planes.sort_by_key(|p| std::cmp::Reverse(p.inlier_count));
    planes
}

fn draw_triple(pts: &[Vec3], tree: &KdTree, radius: f64, rng: &mut ChaCha8Rng) -> Option<(usize, usize, usize)> {
    let n = pts.len();
    let a = rng.random_range(0..n);
    let mut near = Vec::new();
    tree.within_radius(&pts[a], radius, &mut near);
    near.retain(|&i| i != a);
    let (b, c) = if near.len() >= 2 {
        let s = rand::seq::index::sample(rng, near.len(), 2);
        (near[s.index(0)], near[s.index(1)])
    } else {
        (rng.random_range(0..n), rng.random_range(0..n))
    };
    (a != b && b != c && a != c).then_some((a, b, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn finds_single_noisy_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise = Normal::new(0.0, 0.0005).unwrap();
        let pts: Vec<Vec3> = (0..2000)
            .map(|_| Vec3::new(rng.random(), rng.random(), 0.3 + noise.sample(&mut rng)))
            .collect();
        let planes = detect_planes(&PointCloud::new(pts), &RansacConfig::default(), 5);
        assert!(!planes.is_empty());
        let p = &planes[0];
        assert!(p.normal[2] > 0.9999);
        assert!((p.offset - 0.3).abs() < 1e-3);
        assert!(p.inlier_count > 1800);
    }

    #[test]
    fn too_few_points_gives_no_plane() {
        let pts: Vec<Vec3> = (0..100).map(|i| Vec3::new(i as f64 / 100.0, (i * 7 % 100) as f64 / 100.0, 0.0)).collect();
        assert!(detect_planes(&PointCloud::new(pts), &RansacConfig::default(), 0).is_empty());
    }

    #[test]
    fn fit_plane_is_canonical() {
        let pts = vec![Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 1.0, -1.0), Vec3::new(1.0, 0.0, -1.0)];
        let (n, off) = fit_plane(&pts).unwrap();
        assert!((n - Vec3::z()).norm() < 1e-12);
        assert!((off + 1.0).abs() < 1e-12);
    }
}
