//! Geometric guidance: distinct-region masks, the reference cloud, plane
//! detection and planar prompts.

mod ransac;

pub use ransac::{detect_planes, fit_plane, RansacConfig};

use crate::cloud::PointCloud;
use crate::math::{arr3, derive_seed, Vec3};
use crate::spatial::KdTree;
use crate::par;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default distance above which a point counts as distinct.
pub const DEFAULT_TAU: f64 = 0.03;
/// Default number of points per prompt.
pub const DEFAULT_PROMPT_SIZE: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuidanceError {
    #[error("plane has {available} inliers, prompt needs {wanted}")]
    TooFewInliers { available: usize, wanted: usize },
}

/// Marks points of each cloud farther than `tau` from the other cloud.
pub fn diff_mask(p_full: &PointCloud, p_prev: &PointCloud, tau: f64) -> (Vec<bool>, Vec<bool>) {
    if p_prev.is_empty() {
        return (vec![true; p_full.len()], Vec::new());
    }
    if p_full.is_empty() {
        return (Vec::new(), vec![true; p_prev.len()]);
    }
    let t2 = tau * tau;
    let far = |from: &PointCloud, to: &PointCloud| -> Vec<bool> {
        KdTree::new(&to.points).nearest_sq_dists(&from.points).into_iter().map(|d| d > t2).collect()
    };
    (far(p_full, p_prev), far(p_prev, p_full))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Full,
    Prev,
}

/// Masked points of both clouds, concatenated (full first).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefCloud {
    pub cloud: PointCloud,
    pub provenance: Vec<Provenance>,
}

impl RefCloud {
    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.provenance.iter().filter(|&&x| x == p).count()
    }
}

pub fn build_p_ref(p_full: &PointCloud, p_prev: &PointCloud, mask_full: &[bool], mask_prev: &[bool]) -> RefCloud {
    assert_eq!(mask_full.len(), p_full.len(), "mask_full sized to p_full");
    assert_eq!(mask_prev.len(), p_prev.len(), "mask_prev sized to p_prev");
    let pick = |m: &[bool]| m.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect::<Vec<_>>();
    let a = p_full.select(&pick(mask_full));
    let b = p_prev.select(&pick(mask_prev));
    let provenance = std::iter::repeat_n(Provenance::Full, a.len()).chain(std::iter::repeat_n(Provenance::Prev, b.len())).collect();
    let normals = match (a.normals, b.normals) {
        (Some(mut na), Some(nb)) => {
            na.extend(nb);
            Some(na)
        }
        (Some(na), None) if b.points.is_empty() => Some(na),
        (None, Some(nb)) if a.points.is_empty() => Some(nb),
        _ => None,
    };
    let mut points = a.points;
    points.extend(b.points);
    RefCloud { cloud: PointCloud { points, normals, mask: None }, provenance }
}

/// Detected plane `normal . x = offset` with the indices of its inliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: [f64; 3],
    pub offset: f64,
    pub inliers: Vec<usize>,
    pub inlier_count: usize,
}

impl Plane {
    pub fn normal_vec(&self) -> Vec3 {
        Vec3::from(self.normal)
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal_vec().dot(p) - self.offset
    }
}

/// Inlier points sampled from one plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanePrompt {
    pub points: Vec<[f64; 3]>,
    pub normal: [f64; 3],
    pub offset: f64,
    pub inlier_count: usize,
}

impl PlanePrompt {
    pub fn normal_vec(&self) -> Vec3 {
        Vec3::from(self.normal)
    }
}

/// Draws `k` distinct inliers of `plane`.
pub fn sample_prompt(plane: &Plane, cloud: &PointCloud, k: usize, seed: u64) -> Result<PlanePrompt, GuidanceError> {
    if plane.inliers.len() < k {
        return Err(GuidanceError::TooFewInliers { available: plane.inliers.len(), wanted: k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x70_726f_6d70));
    let picks = rand::seq::index::sample(&mut rng, plane.inliers.len(), k);
    Ok(PlanePrompt {
        points: picks.iter().map(|i| arr3(&cloud.points[plane.inliers[i]])).collect(),
        normal: plane.normal,
        offset: plane.offset,
        inlier_count: plane.inlier_count,
    })
}

/// One prompt per plane, skipping planes with too few inliers.
pub fn sample_prompts(planes: &[Plane], cloud: &PointCloud, k: usize, seed: u64) -> Vec<PlanePrompt> {
    par::map_range(planes.len(), |i| sample_prompt(&planes[i], cloud, k, derive_seed(seed, i as u64)).ok())
        .into_iter()
        .flatten()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(z: f64, n: usize, x0: f64, x1: f64) -> Vec<Vec3> {
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                v.push(Vec3::new(x0 + (x1 - x0) * i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64, z));
            }
        }
        v
    }

    #[test]
    fn empty_prev_marks_everything() {
        let full = PointCloud::new(grid(0.0, 10, 0.0, 1.0));
        let (mf, mp) = diff_mask(&full, &PointCloud::default(), DEFAULT_TAU);
        assert!(mf.iter().all(|&b| b));
        assert!(mp.is_empty());
        let r = build_p_ref(&full, &PointCloud::default(), &mf, &mp);
        assert_eq!(r.cloud.points, full.points);
    }

    #[test]
    fn identical_clouds_mask_nothing() {
        let full = PointCloud::new(grid(0.0, 10, 0.0, 1.0));
        let (mf, mp) = diff_mask(&full, &full, DEFAULT_TAU);
        assert!(mf.iter().chain(&mp).all(|&b| !b));
        assert!(build_p_ref(&full, &full, &mf, &mp).is_empty());
    }

    #[test]
    fn swap_symmetry_and_tau_monotonicity() {
        let a = PointCloud::new(grid(0.0, 12, 0.0, 1.0));
        let b = PointCloud::new(grid(0.05, 12, 0.5, 1.5));
        let (f1, p1) = diff_mask(&a, &b, 0.03);
        let (f2, p2) = diff_mask(&b, &a, 0.03);
        assert_eq!(f1, p2);
        assert_eq!(p1, f2);
        let (f3, _) = diff_mask(&a, &b, 0.1);
        assert!(f1.iter().zip(&f3).all(|(x, y)| *x || !*y));
    }

    #[test]
    fn prompt_sampling() {
        let pts = grid(0.25, 30, 0.0, 1.0);
        let cloud = PointCloud::new(pts);
        let plane = Plane { normal: [0.0, 0.0, 1.0], offset: 0.25, inliers: (0..500).collect(), inlier_count: 500 };
        let pr = sample_prompt(&plane, &cloud, 64, 9).unwrap();
        assert_eq!(pr.points.len(), 64);
        let mut uniq = pr.points.clone();
        uniq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        uniq.dedup();
        assert_eq!(uniq.len(), 64);
        assert!(pr.points.iter().all(|p| (p[2] - 0.25).abs() <= 1e-3));
        assert_eq!(sample_prompt(&plane, &cloud, 64, 9).unwrap(), pr);
        assert_eq!(sample_prompt(&plane, &cloud, 16, 9).unwrap().points.len(), 16);
        assert!(sample_prompt(&plane, &cloud, 501, 9).is_err());
    }
}
