use super::transform::{inverse_with, rotation_of, transform_with};
use crate::dsl::planar::{bounds, discretize_loop, point_in_polygon, signed_area, DegenerateCurve};
use crate::dsl::{Extrusion, Point2, Sketch};
use crate::math::{Mat3, Vec3};

/// Closed polygons per face (outer first), in sketch-local units.
#[derive(Debug, Clone)]
pub struct DiscretizedSketch {
    pub faces: Vec<Vec<Vec<Point2>>>,
    pub source: Sketch,
    pub chord_tol: f64,
}

impl DiscretizedSketch {
    pub fn new(sketch: &Sketch, chord_tol: f64) -> Result<Self, DegenerateCurve> {
        let faces = sketch
            .faces
            .iter()
            .map(|f| f.loops().map(|l| discretize_loop(l, chord_tol)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DiscretizedSketch { faces, source: sketch.clone(), chord_tol })
    }

    /// Even-odd test within each face, union over faces.
    pub fn contains(&self, p: Point2) -> bool {
        self.faces.iter().any(|loops| loops.iter().filter(|poly| point_in_polygon(p, poly)).count() % 2 == 1)
    }

    /// Region area (outer minus holes, summed over faces).
    pub fn area(&self) -> f64 {
        self.faces
            .iter()
            .map(|loops| {
                let outer = signed_area(&loops[0]).abs();
                outer - loops[1..].iter().map(|p| signed_area(p).abs()).sum::<f64>()
            })
            .sum()
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        let all: Vec<Point2> = self.faces.iter().flat_map(|f| f[0].iter().copied()).collect();
        bounds(&all)
    }

    /// Every polygon edge as a pair of endpoints.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.faces.iter().flatten().flat_map(|poly| (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Outside,
    Inside,
    Boundary,
}

/// Uniform 2D grid over the sketch bounds classifying cells as fully
/// inside, fully outside, or crossed by an edge.
#[derive(Debug, Clone)]
struct Grid {
    min: Point2,
    cell: [f64; 2],
    n: usize,
    cells: Vec<Cell>,
}

const GRID_CELLS: usize = 48;

impl Grid {
    fn build(sk: &DiscretizedSketch) -> Grid {
        let (lo, hi) = sk.bounds();
        let n = GRID_CELLS;
        let pad = [(hi[0] - lo[0]).max(1e-12) * 1e-6, (hi[1] - lo[1]).max(1e-12) * 1e-6];
        let min = [lo[0] - pad[0], lo[1] - pad[1]];
        let cell = [(hi[0] - lo[0] + 2.0 * pad[0]) / n as f64, (hi[1] - lo[1] + 2.0 * pad[1]) / n as f64];
        let mut cells = vec![Cell::Outside; n * n];
        let clampi = |v: f64| (v.floor().max(0.0) as usize).min(n - 1);
        for (a, b) in sk.edges() {
            let i0 = clampi((a[0].min(b[0]) - min[0]) / cell[0]);
            let i1 = clampi((a[0].max(b[0]) - min[0]) / cell[0]);
            let j0 = clampi((a[1].min(b[1]) - min[1]) / cell[1]);
            let j1 = clampi((a[1].max(b[1]) - min[1]) / cell[1]);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    cells[j * n + i] = Cell::Boundary;
                }
            }
        }
        for j in 0..n {
            for i in 0..n {
                if cells[j * n + i] != Cell::Boundary {
                    let c = [min[0] + (i as f64 + 0.5) * cell[0], min[1] + (j as f64 + 0.5) * cell[1]];
                    cells[j * n + i] = if sk.contains(c) { Cell::Inside } else { Cell::Outside };
                }
            }
        }
        Grid { min, cell, n, cells }
    }

    fn lookup(&self, p: Point2) -> Cell {
        let fi = (p[0] - self.min[0]) / self.cell[0];
        let fj = (p[1] - self.min[1]) / self.cell[1];
        if !(fi >= 0.0 && fj >= 0.0 && fi < self.n as f64 && fj < self.n as f64) {
            return Cell::Outside;
        }
        self.cells[fj as usize * self.n + fi as usize]
    }
}

/// One extruded sketch placed in world space.
#[derive(Debug, Clone)]
pub struct ExtrusionCylinder {
    pub sketch: DiscretizedSketch,
    pub extrusion: Extrusion,
    pub rotation: Mat3,
    grid: Grid,
}

impl ExtrusionCylinder {
    /// `chord_tol` is in world units and is divided by the sketch scale.
    pub fn new(sketch: &Sketch, extrusion: &Extrusion, chord_tol: f64) -> Result<Self, DegenerateCurve> {
        let sk = DiscretizedSketch::new(sketch, chord_tol / extrusion.scale)?;
        let grid = Grid::build(&sk);
        Ok(ExtrusionCylinder { sketch: sk, extrusion: extrusion.clone(), rotation: rotation_of(extrusion), grid })
    }

    pub fn contains_local(&self, p: Point2, z: f64) -> bool {
        let (lo, hi) = self.z_range();
        if z < lo || z > hi {
            return false;
        }
        match self.grid.lookup(p) {
            Cell::Inside => true,
            Cell::Outside => false,
            Cell::Boundary => self.sketch.contains(p),
        }
    }

    pub fn contains(&self, q: &Vec3) -> bool {
        let (p, z) = self.to_local(q);
        self.contains_local(p, z)
    }

    pub fn to_local(&self, q: &Vec3) -> (Point2, f64) {
        inverse_with(&self.rotation, q, &self.extrusion)
    }

    pub fn to_world(&self, p: Point2, z: f64) -> Vec3 {
        transform_with(&self.rotation, p, &self.extrusion, z)
    }

    /// Sketch-plane normal in world space.
    pub fn normal(&self) -> Vec3 {
        self.rotation.column(2).into_owned()
    }

    pub fn z_range(&self) -> (f64, f64) {
        let e = &self.extrusion;
        (e.d_minus.min(e.d_plus), e.d_minus.max(e.d_plus))
    }

    /// World-space volume.
    pub fn volume(&self) -> f64 {
        let (lo, hi) = self.z_range();
        self.sketch.area() * self.extrusion.scale.powi(2) * (hi - lo)
    }
}
