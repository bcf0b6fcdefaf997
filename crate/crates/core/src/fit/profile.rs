use super::{FitError, StepFitConfig};
use crate::cloud::PointCloud;
use crate::guidance::PlanePrompt;
use crate::math::{plane_frame, Vec3};
use crate::dsl::Point2;

/// Occupancy raster of the cross-section on a prompt plane.
///
/// Plane coordinates of a world point `x` are `(u.x, v.x)`; cell `(i, j)`
/// covers `origin + [i, i+1) x [j, j+1)` cells.
#[derive(Debug, Clone)]
pub struct Profile {
    pub u: Vec3,
    pub v: Vec3,
    pub n: Vec3,
    pub offset: f64,
    pub origin: Point2,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    pub filled: Vec<bool>,
    pub slab_points: usize,
}

impl Profile {
    pub fn is_filled(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny && self.filled[j as usize * self.nx + i as usize]
    }

    /// Plane coordinates and signed offset from the plane.
    pub fn project(&self, p: &Vec3) -> (Point2, f64) {
        ([self.u.dot(p), self.v.dot(p)], self.n.dot(p) - self.offset)
    }

    pub fn contains(&self, q: Point2) -> bool {
        let i = ((q[0] - self.origin[0]) / self.cell).floor();
        let j = ((q[1] - self.origin[1]) / self.cell).floor();
        self.is_filled(i as isize, j as isize)
    }

    pub fn filled_count(&self) -> usize {
        self.filled.iter().filter(|&&f| f).count()
    }

    pub fn area(&self) -> f64 {
        self.filled_count() as f64 * self.cell * self.cell
    }

    /// Grid corner `(i, j)` in plane coordinates.
    pub fn corner(&self, i: f64, j: f64) -> Point2 {
        [self.origin[0] + i * self.cell, self.origin[1] + j * self.cell]
    }

    /// Copy with every enclosed empty region filled.
    pub fn without_holes(&self) -> Profile {
        let (nx, ny) = (self.nx, self.ny);
        let mut outside = vec![false; nx * ny];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for i in 0..nx {
            stack.push((i, 0));
            stack.push((i, ny - 1));
        }
        for j in 0..ny {
            stack.push((0, j));
            stack.push((nx - 1, j));
        }
        while let Some((i, j)) = stack.pop() {
            let k = j * nx + i;
            if outside[k] || self.filled[k] {
                continue;
            }
            outside[k] = true;
            if i > 0 {
                stack.push((i - 1, j));
            }
            if i + 1 < nx {
                stack.push((i + 1, j));
            }
            if j > 0 {
                stack.push((i, j - 1));
            }
            if j + 1 < ny {
                stack.push((i, j + 1));
            }
        }
        Profile { filled: outside.iter().map(|o| !o).collect(), ..self.clone() }
    }

    pub fn has_holes(&self) -> bool {
        self.without_holes().filled_count() != self.filled_count()
    }
}

/// Rasterizes the slab of `p_ref` around the prompt plane and closes it.
pub fn extract_profile(prompt: &PlanePrompt, p_ref: &PointCloud, cfg: &StepFitConfig) -> Result<Profile, FitError> {
    let (u, v, n) = plane_frame(&prompt.normal_vec());
    let offset = prompt.offset;
    let slab: Vec<Point2> = p_ref
        .points
        .iter()
        .filter(|p| (n.dot(p) - offset).abs() <= cfg.slab_half)
        .map(|p| [u.dot(p), v.dot(p)])
        .collect();
    if slab.len() < cfg.min_slab_points {
        return Err(FitError::InsufficientSupport { points: slab.len() });
    }
    let cell = cfg.cell;
    let r = cfg.closing_radius;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &slab {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let pad = r + 2.0 * cell;
    let origin = [lo[0] - pad, lo[1] - pad];
    let nx = ((hi[0] - lo[0] + 2.0 * pad) / cell).ceil() as usize + 1;
    let ny = ((hi[1] - lo[1] + 2.0 * pad) / cell).ceil() as usize + 1;

    let mut dilated = vec![false; nx * ny];
    let rc = (r / cell).ceil() as isize;
    for p in &slab {
        let ci = ((p[0] - origin[0]) / cell).floor() as isize;
        let cj = ((p[1] - origin[1]) / cell).floor() as isize;
        for dj in -rc..=rc {
            for di in -rc..=rc {
                let (i, j) = (ci + di, cj + dj);
                if i < 0 || j < 0 || i as usize >= nx || j as usize >= ny {
                    continue;
                }
                let c = [origin[0] + (i as f64 + 0.5) * cell, origin[1] + (j as f64 + 0.5) * cell];
                if (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2) <= r * r {
                    dilated[j as usize * nx + i as usize] = true;
                }
            }
        }
    }
    let rr = r / cell;
    let disk: Vec<(isize, isize)> = (-rc..=rc)
        .flat_map(|dj| (-rc..=rc).map(move |di| (di, dj)))
        .filter(|&(di, dj)| ((di * di + dj * dj) as f64) <= rr * rr)
        .collect();
    let at = |i: isize, j: isize| i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && dilated[j as usize * nx + i as usize];
    let filled = crate::par::map_range(nx * ny, |k| {
        let (i, j) = ((k % nx) as isize, (k / nx) as isize);
        dilated[k] && disk.iter().all(|&(di, dj)| at(i + di, j + dj))
    });
    Ok(Profile { u, v, n, offset, origin, cell, nx, ny, filled, slab_points: slab.len() })
}
