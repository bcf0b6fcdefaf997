//! Contour simplification and primitive fitting.

use super::contour::{doubled_area, trace_contours};
use super::profile::Profile;
use super::{FitError, StepFitConfig};
use crate::dsl::planar::point_in_polygon;
use crate::dsl::{circumcircle, Curve, Face, Loop, Point2, Sketch};

/// Sketch in plane coordinates plus the worst fit residual of each loop.
#[derive(Debug, Clone)]
pub struct FittedSketch {
    pub sketch: Sketch,
    pub residuals: Vec<f64>,
}

/// Traces the profile's contours, nests holes into faces and fits each
/// loop with a circle or a polygon with optional arcs.
pub fn fit_loops(profile: &Profile, cfg: &StepFitConfig) -> Result<FittedSketch, FitError> {
    let min_size = cfg.min_across_cells as f64 * profile.cell;
    let mut outers: Vec<(Vec<Point2>, Loop, f64)> = Vec::new();
    let mut holes: Vec<(Point2, Loop, f64)> = Vec::new();
    for c in trace_contours(profile) {
        let area = doubled_area(&c);
        let pts: Vec<Point2> = c.iter().map(|q| profile.corner(q[0] as f64, q[1] as f64)).collect();
        let (lo, hi) = crate::dsl::planar::bounds(&pts);
        if hi[0] - lo[0] < min_size || hi[1] - lo[1] < min_size {
            continue;
        }
        let (lp, res) = fit_contour(&pts, cfg);
        if area > 0 {
            outers.push((pts, lp, res));
        } else {
            // A point just on the filled side of the first hole edge.
            let (a, b) = (c[0], c[1]);
            let d = [(b[0] - a[0]) as f64, (b[1] - a[1]) as f64];
            let m = [(a[0] + b[0]) as f64 / 2.0 - 0.25 * d[1], (a[1] + b[1]) as f64 / 2.0 + 0.25 * d[0]];
            holes.push((profile.corner(m[0], m[1]), lp, res));
        }
    }
    if outers.is_empty() {
        return Err(FitError::DegenerateProfile);
    }
    let mut faces: Vec<Face> = outers.iter().map(|(_, lp, _)| Face::new(lp.clone())).collect();
    let mut residuals: Vec<f64> = outers.iter().map(|o| o.2).collect();
    for (probe, lp, res) in holes {
        let owner = outers
            .iter()
            .enumerate()
            .filter(|(_, (poly, _, _))| point_in_polygon(probe, poly))
            .min_by(|a, b| poly_area(&a.1 .0).total_cmp(&poly_area(&b.1 .0)))
            .map(|(i, _)| i);
        if let Some(i) = owner {
            faces[i].inner.push(lp);
            residuals.push(res);
        }
    }
    Ok(FittedSketch { sketch: Sketch::new(faces), residuals })
}

fn poly_area(p: &[Point2]) -> f64 {
    crate::dsl::planar::signed_area(p).abs()
}

/// Fits one closed contour; returns the loop and its worst residual.
pub fn fit_contour(pts: &[Point2], cfg: &StepFitConfig) -> (Loop, f64) {
    let n = pts.len();
    let mids: Vec<Point2> = (0..n).map(|k| midpoint(pts[k], pts[(k + 1) % n])).collect();
    if let Some((c, r)) = kasa_fit(&mids) {
        let devs: Vec<f64> = mids.iter().map(|m| (dist(*m, c) - r).abs()).collect();
        let res = devs.iter().copied().fold(0.0, f64::max);
        let typical = crate::math::percentile(&devs, 0.95).unwrap_or(res);
        if typical <= cfg.fit_tol && res <= 2.0 * cfg.fit_tol && r >= 2.0 * cfg.cell {
            return (Loop::circle(c, r), res);
        }
    }
    let keep = douglas_peucker_closed(pts, cfg.fit_tol);
    let (corners, res) = refine_polygon(pts, &keep, cfg);
    (with_arcs(pts, &corners, cfg), res)
}

fn midpoint(a: Point2, b: Point2) -> Point2 {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
}

fn dist(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Algebraic least-squares circle.
pub fn kasa_fit(pts: &[Point2]) -> Option<(Point2, f64)> {
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p[0]).sum::<f64>() / m, pts.iter().map(|p| p[1]).sum::<f64>() / m);
    let (mut suu, mut svv, mut suv, mut suuu, mut svvv, mut suvv, mut svuu) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in pts {
        let (u, v) = (p[0] - mx, p[1] - my);
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
    }
    let det = suu * svv - suv * suv;
    if det.abs() < 1e-18 {
        return None;
    }
    let b1 = 0.5 * (suuu + suvv);
    let b2 = 0.5 * (svvv + svuu);
    let uc = (b1 * svv - b2 * suv) / det;
    let vc = (suu * b2 - suv * b1) / det;
    let r = (uc * uc + vc * vc + (suu + svv) / m).sqrt();
    r.is_finite().then_some(([uc + mx, vc + my], r))
}

/// Indices of the vertices kept by Douglas-Peucker on a closed polygon.
pub fn douglas_peucker_closed(pts: &[Point2], tol: f64) -> Vec<usize> {
    let n = pts.len();
    if n <= 3 {
        return (0..n).collect();
    }
    let far = (1..n).max_by(|&a, &b| dist(pts[0], pts[a]).total_cmp(&dist(pts[0], pts[b]))).unwrap_or(n / 2);
    let mut keep = vec![0];
    dp_range(pts, 0, far, tol, &mut keep);
    keep.push(far);
    dp_range(pts, far, n, tol, &mut keep);
    keep
}

fn dp_range(pts: &[Point2], a: usize, b: usize, tol: f64, keep: &mut Vec<usize>) {
    if b <= a + 1 {
        return;
    }
    let n = pts.len();
    let (pa, pb) = (pts[a % n], pts[b % n]);
    let (mut best, mut idx) = (0.0, a);
    for k in a + 1..b {
        let d = crate::dsl::planar::point_segment_distance(pts[k % n], pa, pb);
        if d > best {
            best = d;
            idx = k;
        }
    }
    if best > tol {
        dp_range(pts, a, idx, tol, keep);
        keep.push(idx % n);
        dp_range(pts, idx, b, tol, keep);
    }
}

/// Line through points by total least squares: (point, unit direction).
fn fit_line(pts: &[Point2]) -> Option<(Point2, Point2)> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let c = [pts.iter().map(|p| p[0]).sum::<f64>() / m, pts.iter().map(|p| p[1]).sum::<f64>() / m];
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (x, y) = (p[0] - c[0], p[1] - c[1]);
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((c, [theta.cos(), theta.sin()]))
}

fn intersect(l1: (Point2, Point2), l2: (Point2, Point2)) -> Option<Point2> {
    let ((p, d), (q, e)) = (l1, l2);
    let den = d[0] * e[1] - d[1] * e[0];
    if den.abs() < 0.2 {
        return None;
    }
    let t = ((q[0] - p[0]) * e[1] - (q[1] - p[1]) * e[0]) / den;
    Some([p[0] + t * d[0], p[1] + t * d[1]])
}

/// Replaces each simplified edge by a least-squares line over its contour
/// run, puts corners at line intersections and drops bevel edges left by
/// rounded corners.
fn refine_polygon(pts: &[Point2], keep: &[usize], cfg: &StepFitConfig) -> (Vec<Point2>, f64) {
    let n = pts.len();
    let m = keep.len();
    let mut lines = Vec::with_capacity(m);
    let mut runs = Vec::with_capacity(m);
    for k in 0..m {
        let (a, b) = (keep[k], keep[(k + 1) % m]);
        let len = if b > a { b - a } else { b + n - a };
        let run: Vec<Point2> = (0..len).map(|t| midpoint(pts[(a + t) % n], pts[(a + t + 1) % n])).collect();
        let (pa, pb) = (pts[a], pts[b]);
        let trimmed: Vec<Point2> = run
            .iter()
            .copied()
            .filter(|q| dist(*q, pa) > cfg.closing_radius && dist(*q, pb) > cfg.closing_radius)
            .collect();
        let line = if trimmed.len() >= 3 { fit_line(&trimmed) } else { None };
        lines.push(line.unwrap_or_else(|| {
            let d = dist(pa, pb).max(1e-12);
            (pa, [(pb[0] - pa[0]) / d, (pb[1] - pa[1]) / d])
        }));
        runs.push(run);
    }
    let corner_tol = 3.0 * cfg.fit_tol + cfg.closing_radius;
    let mut corners: Vec<Point2> = (0..m)
        .map(|k| {
            let prev = lines[(k + m - 1) % m];
            let dp = pts[keep[k]];
            match intersect(prev, lines[k]) {
                Some(c) if dist(c, dp) <= corner_tol => c,
                _ => dp,
            }
        })
        .collect();
    let mut lines_cur = lines;
    // Drop short bevel edges when their neighbours meet close by.
    let short = 1.5 * cfg.closing_radius;
    loop {
        let m = corners.len();
        if m <= 3 {
            break;
        }
        let mut changed = false;
        for k in 0..m {
            let (a, b) = (corners[k], corners[(k + 1) % m]);
            if dist(a, b) >= short {
                continue;
            }
            let prev = lines_cur[(k + m - 1) % m];
            let next = lines_cur[(k + 1) % m];
            if let Some(c) = intersect(prev, next) {
                if dist(c, midpoint(a, b)) <= 2.0 * short {
                    corners[k] = c;
                    corners.remove((k + 1) % m);
                    lines_cur.remove(k);
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Drop corners that sit on the segment joining their neighbours.
    let mut k = 0;
    while corners.len() > 3 && k < corners.len() {
        let m = corners.len();
        let (a, c, b) = (corners[(k + m - 1) % m], corners[k], corners[(k + 1) % m]);
        if crate::dsl::planar::point_segment_distance(c, a, b) < 0.5 * cfg.fit_tol {
            corners.remove(k);
        } else {
            k += 1;
        }
    }
    let residual = runs
        .iter()
        .flatten()
        .map(|q| {
            let m = corners.len();
            (0..m).map(|k| crate::dsl::planar::point_segment_distance(*q, corners[k], corners[(k + 1) % m])).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    (corners, residual)
}

/// Builds the loop, replacing runs of at least five short corners that lie
/// on a common circle by a single arc.
fn with_arcs(pts: &[Point2], corners: &[Point2], cfg: &StepFitConfig) -> Loop {
    let m = corners.len();
    let max_edge = 8.0 * cfg.closing_radius;
    // Start after a long edge so that arc runs do not wrap around.
    let shift = (0..m).find(|&k| dist(corners[(k + m - 1) % m], corners[k]) >= max_edge).unwrap_or(0);
    let rotated: Vec<Point2> = (0..m).map(|k| corners[(k + shift) % m]).collect();
    let corners = &rotated[..];
    let on_circle = |run: &[Point2]| -> Option<(Point2, f64)> {
        let (c, r) = kasa_fit(run)?;
        let ok = run.iter().all(|q| (dist(*q, c) - r).abs() <= cfg.fit_tol);
        ok.then_some((c, r))
    };
    let mut curves: Vec<Curve> = Vec::new();
    let mut k = 0;
    while k < m {
        let mut end = k;
        while end + 1 < m && dist(corners[end], corners[end + 1]) < max_edge {
            let run: Vec<Point2> = corners[k..=end + 1].to_vec();
            if run.len() >= 3 && on_circle(&run).is_none() {
                break;
            }
            end += 1;
        }
        if end - k + 1 >= 5 {
            let run = &corners[k..=end];
            let (c, r) = on_circle(run).expect("checked");
            let mid_src = nearest_contour_point(pts, run[run.len() / 2]);
            let dir = [mid_src[0] - c[0], mid_src[1] - c[1]];
            let dl = dir[0].hypot(dir[1]).max(1e-12);
            let mid = [c[0] + r * dir[0] / dl, c[1] + r * dir[1] / dl];
            if circumcircle(run[0], mid, run[run.len() - 1]).is_some() {
                curves.push(Curve::arc(run[0], mid, run[run.len() - 1]));
                k = end;
                if k == m - 1 {
                    curves.push(Curve::line(corners[m - 1], corners[0]));
                    break;
                }
                continue;
            }
        }
        curves.push(Curve::line(corners[k], corners[(k + 1) % m]));
        k += 1;
    }
    Loop::new(curves)
}

fn nearest_contour_point(pts: &[Point2], q: Point2) -> Point2 {
    *pts.iter().min_by(|a, b| dist(**a, q).total_cmp(&dist(**b, q))).expect("non-empty contour")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::CurveKind;
    use crate::math::Vec3;

    fn raster(nx: usize, ny: usize, cell: f64, inside: impl Fn(f64, f64) -> bool) -> Profile {
        let mut filled = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                filled[j * nx + i] = inside((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell);
            }
        }
        Profile { u: Vec3::x(), v: Vec3::y(), n: Vec3::z(), offset: 0.0, origin: [0.0, 0.0], cell, nx, ny, filled, slab_points: 0 }
    }

    fn cfg() -> StepFitConfig {
        StepFitConfig::default()
    }

    #[test]
    fn disc_becomes_circle() {
        let cell = 1.0 / 128.0;
        let p = raster(128, 128, cell, |x, y| (x - 0.5).hypot(y - 0.45) <= 0.3);
        let f = fit_loops(&p, &cfg()).unwrap();
        let lp = &f.sketch.faces[0].outer;
        assert_eq!(lp.curves.len(), 1);
        assert_eq!(lp.curves[0].kind, CurveKind::Circle);
        let (c, r) = lp.curves[0].circle_params().unwrap();
        assert!(dist(c, [0.5, 0.45]) < cell);
        assert!((r - 0.3).abs() < cell);
    }

    #[test]
    fn rectangle_becomes_four_right_angled_lines() {
        let cell = 1.0 / 128.0;
        let p = raster(128, 128, cell, |x, y| (0.1..0.8).contains(&x) && (0.2..0.6).contains(&y));
        let f = fit_loops(&p, &cfg()).unwrap();
        let lp = &f.sketch.faces[0].outer;
        assert_eq!(lp.curves.len(), 4);
        for k in 0..4 {
            let a = &lp.curves[k];
            let b = &lp.curves[(k + 1) % 4];
            let da = [a.points[1][0] - a.points[0][0], a.points[1][1] - a.points[0][1]];
            let db = [b.points[1][0] - b.points[0][0], b.points[1][1] - b.points[0][1]];
            let cos = (da[0] * db[0] + da[1] * db[1]) / (da[0].hypot(da[1]) * db[0].hypot(db[1]));
            assert!(cos.abs() < (2.0f64).to_radians().sin());
        }
    }

    #[test]
    fn rectangle_with_hole_nests() {
        let cell = 1.0 / 128.0;
        let p = raster(128, 128, cell, |x, y| {
            (0.1..0.9).contains(&x) && (0.1..0.7).contains(&y) && (x - 0.5).hypot(y - 0.4) > 0.15
        });
        let f = fit_loops(&p, &cfg()).unwrap();
        assert_eq!(f.sketch.faces.len(), 1);
        assert_eq!(f.sketch.faces[0].outer.curves.len(), 4);
        assert_eq!(f.sketch.faces[0].inner.len(), 1);
        assert_eq!(f.sketch.faces[0].inner[0].curves[0].kind, CurveKind::Circle);
    }

    #[test]
    fn slot_gets_arcs() {
        let cell = 1.0 / 128.0;
        let p = raster(128, 128, cell, |x, y| {
            let cx = x.clamp(0.35, 0.65);
            (x - cx).hypot(y - 0.5) <= 0.2
        });
        let f = fit_loops(&p, &cfg()).unwrap();
        let lp = &f.sketch.faces[0].outer;
        let arcs = lp.curves.iter().filter(|c| c.kind == CurveKind::Arc).count();
        assert_eq!(arcs, 2, "{:?}", lp.curves.iter().map(|c| c.kind).collect::<Vec<_>>());
    }

    #[test]
    fn tiny_blob_is_degenerate() {
        let cell = 1.0 / 128.0;
        let p = raster(32, 32, cell, |x, y| x.hypot(y - 0.1) < 1.5 * cell + 0.1 && x > 0.1 && x < 0.11);
        assert!(matches!(fit_loops(&p, &cfg()), Err(FitError::DegenerateProfile)));
    }
}
