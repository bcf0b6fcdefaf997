use super::cylinder::ExtrusionCylinder;
use crate::math::Vec3;

/// Oriented box as eight corners plus its axis-aligned hull.
///
/// Corners are listed at `z = d_minus` then `z = d_plus`, each as
/// (min,min), (max,min), (max,max), (min,max) in sketch coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Bbox3 {
    pub corners: [Vec3; 8],
    pub min: Vec3,
    pub max: Vec3,
}

impl Bbox3 {
    pub fn from_corners(corners: [Vec3; 8]) -> Self {
        let mut min = corners[0];
        let mut max = corners[0];
        for c in &corners[1..] {
            min = min.inf(c);
            max = max.sup(c);
        }
        Bbox3 { corners, min, max }
    }

    pub fn hull_volume(&self) -> f64 {
        (self.max - self.min).product()
    }

    pub fn contains(&self, q: &Vec3, tol: f64) -> bool {
        (0..3).all(|k| q[k] >= self.min[k] - tol && q[k] <= self.max[k] + tol)
    }

    /// Volume of the intersection of the two axis-aligned hulls.
    pub fn hull_intersection(&self, other: &Bbox3) -> f64 {
        (0..3).map(|k| (self.max[k].min(other.max[k]) - self.min[k].max(other.min[k])).max(0.0)).product()
    }

    /// Intersection over union of the axis-aligned hulls.
    pub fn hull_iou(&self, other: &Bbox3) -> f64 {
        let inter = self.hull_intersection(other);
        let union = self.hull_volume() + other.hull_volume() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// Projects the sketch bounds at both extrusion offsets.
pub fn bbox_of_cylinder(cyl: &ExtrusionCylinder) -> Bbox3 {
    let (lo, hi) = cyl.sketch.bounds();
    let e = &cyl.extrusion;
    let quad = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    let corners = std::array::from_fn(|i| {
        let z = if i < 4 { e.d_minus } else { e.d_plus };
        cyl.to_world(quad[i % 4], z)
    });
    Bbox3::from_corners(corners)
}
