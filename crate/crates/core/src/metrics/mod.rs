//! Reconstruction metrics, unit-box normalization and batch reports.

mod report;

pub use report::{
    evaluate_dataset, evaluate_pair, load_gt, load_pairs, load_sequence, EvalConfig, EvalPair, GtSource, IngestError,
    MetricsReport,
    PairResult,
};

use crate::cloud::PointCloud;
use crate::math::Vec3;
use crate::spatial::KdTree;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default samples per side.
pub const DEFAULT_SAMPLES: usize = 16382;
/// Neighborhood radius for edge-point detection.
pub const EDGE_RADIUS: f64 = 0.02;
/// Normal angle above which a neighbor marks an edge point, in degrees.
pub const EDGE_ANGLE_DEG: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("cannot normalize an empty or zero-extent cloud")]
    Degenerate,
    #[error("no reconstruction outcomes")]
    NoResults,
    #[error("point cloud has no normals")]
    MissingNormals,
}

/// Similarity `x -> scale * x + offset` into the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitBox {
    pub scale: f64,
    pub offset: [f64; 3],
}

impl UnitBox {
    /// Fits the bounds `[lo, hi]` into `[0,1]^3`, longest axis spanning 1
    /// and the others centered.
    pub fn fit(lo: &Vec3, hi: &Vec3) -> Result<Self, MetricsError> {
        let ext = hi - lo;
        let longest = ext.max();
        if !(longest > 1e-12) || !longest.is_finite() {
            return Err(MetricsError::Degenerate);
        }
        let scale = 1.0 / longest;
        let offset = std::array::from_fn(|k| 0.5 - scale * (lo[k] + hi[k]) / 2.0);
        Ok(UnitBox { scale, offset })
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        p * self.scale + Vec3::from(self.offset)
    }
}

/// Normalizes a cloud into the unit box; normals are unchanged.
pub fn normalize_unit_box(cloud: &PointCloud) -> Result<(PointCloud, UnitBox), MetricsError> {
    let (lo, hi) = cloud.bounds().ok_or(MetricsError::Degenerate)?;
    let t = UnitBox::fit(&lo, &hi)?;
    Ok((cloud.map_points(|p| t.apply(p)), t))
}

fn directed_sq(from: &[Vec3], to: &KdTree) -> Vec<f64> {
    to.nearest_sq_dists(from)
}

/// Symmetric chamfer distance: mean squared nearest-neighbor distance in
/// each direction, averaged.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> f64 {
    chamfer_points(&a.points, &b.points)
}

pub fn chamfer_points(a: &[Vec3], b: &[Vec3]) -> f64 {
    let (ta, tb) = (KdTree::new(a), KdTree::new(b));
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len().max(1) as f64;
    (mean(directed_sq(a, &tb)) + mean(directed_sq(b, &ta))) / 2.0
}

/// Symmetric Hausdorff distance.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
    let (ta, tb) = (KdTree::new(&a.points), KdTree::new(&b.points));
    let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    max(directed_sq(&a.points, &tb)).max(max(directed_sq(&b.points, &ta))).sqrt()
}

/// Indices of points with a neighbor within `radius` whose normal differs
/// by more than `angle_deg` (orientation ignored).
pub fn edge_points(cloud: &PointCloud, radius: f64, angle_deg: f64) -> Result<Vec<usize>, MetricsError> {
    let normals = cloud.normals.as_ref().ok_or(MetricsError::MissingNormals)?;
    let tree = KdTree::new(&cloud.points);
    let cos_t = angle_deg.to_radians().cos();
    let flags = crate::par::map_range(cloud.len(), |i| {
        let mut nb = Vec::new();
        tree.within_radius(&cloud.points[i], radius, &mut nb);
        nb.iter().any(|&j| normals[i].dot(&normals[j]).abs() < cos_t)
    });
    Ok(flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect())
}

/// Edge chamfer distance and whether it fell back to the plain chamfer
/// distance because one side had no edge points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeChamfer {
    pub value: f64,
    pub fallback: bool,
}

pub fn edge_chamfer(a: &PointCloud, b: &PointCloud) -> Result<EdgeChamfer, MetricsError> {
    edge_chamfer_with(a, b, EDGE_RADIUS, EDGE_ANGLE_DEG)
}

pub fn edge_chamfer_with(a: &PointCloud, b: &PointCloud, radius: f64, angle_deg: f64) -> Result<EdgeChamfer, MetricsError> {
    let ea = edge_points(a, radius, angle_deg)?;
    let eb = edge_points(b, radius, angle_deg)?;
    if ea.is_empty() || eb.is_empty() {
        return Ok(EdgeChamfer { value: chamfer(a, b), fallback: true });
    }
    Ok(EdgeChamfer { value: chamfer(&a.select(&ea), &b.select(&eb)), fallback: false })
}

/// Mean `|cos|` between each point's normal and its nearest neighbor's,
/// averaged over both directions.
pub fn normal_consistency(a: &PointCloud, b: &PointCloud) -> Result<f64, MetricsError> {
    let na = a.normals.as_ref().ok_or(MetricsError::MissingNormals)?;
    let nb = b.normals.as_ref().ok_or(MetricsError::MissingNormals)?;
    let one_way = |from: &PointCloud, nf: &[Vec3], to: &PointCloud, nt: &[Vec3]| {
        let tree = KdTree::new(&to.points);
        let cos = crate::par::map_range(from.len(), |i| {
            let (j, _) = tree.nearest(&from.points[i]).expect("nonempty cloud");
            nf[i].dot(&nt[j]).abs()
        });
        cos.iter().sum::<f64>() / cos.len().max(1) as f64
    };
    Ok((one_way(a, na, b, nb) + one_way(b, nb, a, na)) / 2.0)
}

/// Percentage of invalid outcomes.
pub fn invalid_ratio(valid: &[bool]) -> Result<f64, MetricsError> {
    if valid.is_empty() {
        return Err(MetricsError::NoResults);
    }
    Ok(100.0 * valid.iter().filter(|v| !**v).count() as f64 / valid.len() as f64)
}
