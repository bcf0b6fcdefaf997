//! Static 3D k-d tree with exact nearest-neighbour and radius queries.

use crate::math::Vec3;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { dim: u8, value: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            let n = tree.order.len();
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Vec3 {
        &self.points[i]
    }

    fn build(&mut self, start: usize, end: usize) -> u32 {
        let id = self.nodes.len() as u32;
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start: start as u32, end: end as u32 });
            return id;
        }
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[start..end] {
            let p = &self.points[i as usize];
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let ext = hi - lo;
        let dim = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |a, b| {
            pts[*a as usize][dim].total_cmp(&pts[*b as usize][dim])
        });
        let value = self.points[self.order[mid] as usize][dim];
        self.nodes.push(Node::Split { dim: dim as u8, value, left: 0, right: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[id as usize] {
            *l = left;
            *r = right;
        }
        id
    }

    /// Index and squared distance of the nearest point, `None` when empty.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_in(0, q, &mut best);
        Some(best)
    }

    fn nearest_in(&self, node: u32, q: &Vec3, best: &mut (usize, f64)) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start as usize..*end as usize] {
                    let d = (self.points[i as usize] - q).norm_squared();
                    if d < best.1 || (d == best.1 && (i as usize) < best.0) {
                        *best = (i as usize, d);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[*dim as usize] - value;
                let (near, far) = if diff < 0.0 { (*left, *right) } else { (*right, *left) };
                self.nearest_in(near, q, best);
                if diff * diff <= best.1 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// Appends indices of all points within distance `r` of `q` (inclusive).
    pub fn within_radius(&self, q: &Vec3, r: f64, out: &mut Vec<usize>) {
        if self.points.is_empty() {
            return;
        }
        self.radius_in(0, q, r * r, out);
    }

    fn radius_in(&self, node: u32, q: &Vec3, r2: f64, out: &mut Vec<usize>) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start as usize..*end as usize] {
                    if (self.points[i as usize] - q).norm_squared() <= r2 {
                        out.push(i as usize);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[*dim as usize] - value;
                let (near, far) = if diff < 0.0 { (*left, *right) } else { (*right, *left) };
                self.radius_in(near, q, r2, out);
                if diff * diff <= r2 {
                    self.radius_in(far, q, r2, out);
                }
            }
        }
    }

    /// Squared nearest-neighbour distance for every query point.
    pub fn nearest_sq_dists(&self, queries: &[Vec3]) -> Vec<f64> {
        crate::par::map(queries, |q| self.nearest(q).map_or(f64::INFINITY, |(_, d)| d))
    }
}

/// A cloud together with its k-d tree and a bounded subsample, used as the
/// fixed target of repeated chamfer evaluations.
#[derive(Debug, Clone)]
pub struct IndexedCloud {
    pub points: Vec<Vec3>,
    pub tree: KdTree,
    /// Evenly strided subset of at most the requested size.
    pub subsample: Vec<Vec3>,
}

impl IndexedCloud {
    pub fn new(points: &[Vec3], subsample: usize) -> Self {
        let stride = points.len().div_ceil(subsample.max(1)).max(1);
        IndexedCloud {
            points: points.to_vec(),
            tree: KdTree::new(points),
            subsample: points.iter().step_by(stride).copied().collect(),
        }
    }

    /// Mean squared distance from `queries` to this cloud.
    pub fn mean_sq_from(&self, queries: &[Vec3]) -> f64 {
        mean(&self.tree.nearest_sq_dists(queries))
    }

    /// Symmetric chamfer distance between `other` and this cloud, using the
    /// subsample for the reverse direction.
    pub fn chamfer_fast(&self, other: &[Vec3]) -> f64 {
        let (precision, recall) = self.chamfer_parts(other);
        (precision + recall) / 2.0
    }

    /// Both directions of [`Self::chamfer_fast`]: mean squared distance of
    /// `other` to this cloud, and of the subsample to `other`.
    pub fn chamfer_parts(&self, other: &[Vec3]) -> (f64, f64) {
        if other.is_empty() {
            return (f64::INFINITY, f64::INFINITY);
        }
        let back = KdTree::new(other);
        (self.mean_sq_from(other), mean(&back.nearest_sq_dists(&self.subsample)))
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
