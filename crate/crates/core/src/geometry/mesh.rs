use super::{GeometryError, Solid};
use crate::math::Vec3;
use crate::par;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

/// Indexed triangle mesh.
#[derive(Debug, Clone, Default)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl Mesh {
    /// Signed volume via the divergence theorem.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| self.vertices[t[0]].dot(&self.vertices[t[1]].cross(&self.vertices[t[2]])) / 6.0)
            .sum()
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    pub fn write_obj(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(self.to_obj().as_bytes())
    }
}

// Cube corners are indexed by bits (x, y, z); the six tetrahedra share the
// 0-7 diagonal.
const TETS: [[usize; 4]; 6] = [[0, 1, 3, 7], [0, 1, 5, 7], [0, 2, 3, 7], [0, 2, 6, 7], [0, 4, 5, 7], [0, 4, 6, 7]];
const BISECTIONS: usize = 12;

/// Extracts the occupancy boundary by marching tetrahedra on a `res`-cell
/// grid over the padded hull.
pub fn export_mesh(solid: &Solid, res: usize) -> Result<Mesh, GeometryError> {
    if solid.is_empty() {
        return Err(GeometryError::EmptySolid);
    }
    let res = res.max(2);
    let (lo, hi) = solid.hull();
    let size = (hi - lo).max();
    if !size.is_finite() || size <= 0.0 {
        return Err(GeometryError::EmptySolid);
    }
    let h = size / (res - 2) as f64;
    // Offsets keep grid nodes off the axis-aligned faces of typical models.
    let origin = lo - Vec3::repeat(h * 0.987_654_321);
    let dims = [
        ((hi.x - origin.x) / h).ceil() as usize + 1,
        ((hi.y - origin.y) / h).ceil() as usize + 1,
        ((hi.z - origin.z) / h).ceil() as usize + 1,
    ];
    let node = |i: usize, j: usize, k: usize| (i * (dims[1] + 1) + j) * (dims[2] + 1) + k;
    let pos = |id: usize| {
        let k = id % (dims[2] + 1);
        let j = (id / (dims[2] + 1)) % (dims[1] + 1);
        let i = id / ((dims[2] + 1) * (dims[1] + 1));
        origin + Vec3::new(i as f64, j as f64, k as f64) * h
    };
    let n_nodes = (dims[0] + 1) * (dims[1] + 1) * (dims[2] + 1);
    let occ = par::map_range(n_nodes, |id| solid.occupancy(&pos(id)));
    if !occ.iter().any(|&o| o) {
        return Err(GeometryError::EmptySolid);
    }

    // Triangles as grid-edge keys, inside node first.
    type Edge = (usize, usize);
    let slabs: Vec<Vec<[Edge; 3]>> = par::map_range(dims[0], |i| {
        let mut tris = Vec::new();
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let corners: [usize; 8] = std::array::from_fn(|c| node(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)));
                if corners.iter().all(|&c| occ[c]) || corners.iter().all(|&c| !occ[c]) {
                    continue;
                }
                for tet in TETS {
                    let v: [usize; 4] = tet.map(|c| corners[c]);
                    emit_tet(&v, &occ, &pos, &mut tris);
                }
            }
        }
        tris
    });

    let mut index: HashMap<Edge, usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut triangles = Vec::new();
    for tri in slabs.into_iter().flatten() {
        let t = tri.map(|e| {
            *index.entry(e).or_insert_with(|| {
                edges.push(e);
                edges.len() - 1
            })
        });
        if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
            triangles.push(t);
        }
    }
    let vertices = par::map(&edges, |&(inside, outside)| {
        let (mut a, mut b) = (pos(inside), pos(outside));
        for _ in 0..BISECTIONS {
            let m = (a + b) / 2.0;
            if solid.occupancy(&m) {
                a = m;
            } else {
                b = m;
            }
        }
        (a + b) / 2.0
    });
    Ok(Mesh { vertices, triangles })
}

fn emit_tet(v: &[usize; 4], occ: &[bool], pos: &impl Fn(usize) -> Vec3, out: &mut Vec<[(usize, usize); 3]>) {
    let ins: Vec<usize> = v.iter().copied().filter(|&n| occ[n]).collect();
    let outs: Vec<usize> = v.iter().copied().filter(|&n| !occ[n]).collect();
    let tris: Vec<[(usize, usize); 3]> = match (ins.len(), outs.len()) {
        (1, 3) => vec![[(ins[0], outs[0]), (ins[0], outs[1]), (ins[0], outs[2])]],
        (3, 1) => vec![[(ins[0], outs[0]), (ins[1], outs[0]), (ins[2], outs[0])]],
        (2, 2) => vec![
            [(ins[0], outs[0]), (ins[0], outs[1]), (ins[1], outs[1])],
            [(ins[0], outs[0]), (ins[1], outs[1]), (ins[1], outs[0])],
        ],
        _ => return,
    };
    let centroid = |ns: &[usize]| ns.iter().map(|&n| pos(n)).sum::<Vec3>() / ns.len() as f64;
    let outward = centroid(&outs) - centroid(&ins);
    let mid = |e: (usize, usize)| (pos(e.0) + pos(e.1)) / 2.0;
    for mut t in tris {
        let (a, b, c) = (mid(t[0]), mid(t[1]), mid(t[2]));
        if (b - a).cross(&(c - a)).dot(&outward) < 0.0 {
            t.swap(1, 2);
        }
        out.push(t);
    }
}
