//! 2D polyline utilities shared by validation and execution.

use super::{circumcircle, dist, Curve, CurveKind, Loop, Point2};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DegenerateCurve {
    #[error("arc points are collinear or coincident")]
    CollinearArc,
    #[error("circle has zero radius")]
    ZeroCircle,
    #[error("{kind:?} has {count} points")]
    PointCount { kind: CurveKind, count: usize },
}

/// Piecewise-linear approximation with chord deviation at most `chord_tol`.
///
/// Lines and arcs include both endpoints; circles return a closed ring
/// without repeating the first vertex, counter-clockwise from angle zero
/// of the first diameter point.
pub fn discretize_curve(curve: &Curve, chord_tol: f64) -> Result<Vec<Point2>, DegenerateCurve> {
    if curve.points.len() != curve.kind.point_count() {
        return Err(DegenerateCurve::PointCount { kind: curve.kind, count: curve.points.len() });
    }
    match curve.kind {
        CurveKind::Line => Ok(curve.points.clone()),
        CurveKind::Arc => {
            let [a, m, b] = [curve.points[0], curve.points[1], curve.points[2]];
            let (c, r) = circumcircle(a, m, b).ok_or(DegenerateCurve::CollinearArc)?;
            let a0 = angle(c, a);
            let sweep_end = (angle(c, b) - a0).rem_euclid(TAU);
            let sweep_mid = (angle(c, m) - a0).rem_euclid(TAU);
            let sweep = if sweep_mid < sweep_end { sweep_end } else { sweep_end - TAU };
            let n = segment_count(sweep.abs(), r, chord_tol).max(2);
            let mut out = Vec::with_capacity(n + 1);
            out.push(a);
            for i in 1..n {
                let t = a0 + sweep * i as f64 / n as f64;
                out.push([c[0] + r * t.cos(), c[1] + r * t.sin()]);
            }
            out.push(b);
            Ok(out)
        }
        CurveKind::Circle => {
            let (c, r) = curve.circle_params().expect("point count checked");
            if r <= 0.0 {
                return Err(DegenerateCurve::ZeroCircle);
            }
            let a0 = angle(c, curve.points[0]);
            let n = segment_count(TAU, r, chord_tol).max(8);
            // Vertices sit slightly outside so the polygon keeps the circle's area.
            let w = TAU / n as f64;
            let r = r * (w / w.sin()).sqrt();
            Ok((0..n)
                .map(|i| {
                    let t = a0 + TAU * i as f64 / n as f64;
                    [c[0] + r * t.cos(), c[1] + r * t.sin()]
                })
                .collect())
        }
    }
}

fn angle(c: Point2, p: Point2) -> f64 {
    (p[1] - c[1]).atan2(p[0] - c[0])
}

fn segment_count(sweep: f64, r: f64, tol: f64) -> usize {
    if tol >= r {
        return 1;
    }
    let step = 2.0 * (1.0 - tol / r).acos();
    (sweep / step).ceil().max(1.0) as usize
}

/// Closed polygon for a loop, first vertex not repeated.
pub fn discretize_loop(lp: &Loop, chord_tol: f64) -> Result<Vec<Point2>, DegenerateCurve> {
    let mut out = Vec::new();
    for c in &lp.curves {
        let mut pts = discretize_curve(c, chord_tol)?;
        if c.kind != CurveKind::Circle {
            pts.pop();
        }
        out.extend(pts);
    }
    Ok(out)
}

/// Shoelace area, positive for counter-clockwise polygons.
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

/// Crossing-number test; boundary points may go either way.
pub fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// True when the closed segments `ab` and `cd` share a point.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let scale = dist(a, b).max(dist(c, d)).max(1e-300);
    let eps = 1e-12 * scale * scale;
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    let strict = |x: f64, y: f64| (x > eps && y < -eps) || (x < -eps && y > eps);
    if strict(d1, d2) && strict(d3, d4) {
        return true;
    }
    let on = |p: Point2, q: Point2, r: Point2, o: f64| {
        o.abs() <= eps
            && r[0] >= p[0].min(q[0]) - 1e-12
            && r[0] <= p[0].max(q[0]) + 1e-12
            && r[1] >= p[1].min(q[1]) - 1e-12
            && r[1] <= p[1].max(q[1]) + 1e-12
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// True when two non-adjacent edges of the closed polygon touch.
pub fn polygon_self_intersects(poly: &[Point2]) -> bool {
    let n = poly.len();
    if n < 4 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(a, b, poly[j], poly[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

/// True when any edge of `p` touches any edge of `q`.
pub fn polygons_touch(p: &[Point2], q: &[Point2]) -> bool {
    let (bp, bq) = (bounds(p), bounds(q));
    if bp.0[0] > bq.1[0] || bq.0[0] > bp.1[0] || bp.0[1] > bq.1[1] || bq.0[1] > bp.1[1] {
        return false;
    }
    for i in 0..p.len() {
        let (a, b) = (p[i], p[(i + 1) % p.len()]);
        for j in 0..q.len() {
            if segments_intersect(a, b, q[j], q[(j + 1) % q.len()]) {
                return true;
            }
        }
    }
    false
}

/// Axis-aligned bounds `(min, max)` of a non-empty polygon.
pub fn bounds(poly: &[Point2]) -> (Point2, Point2) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Distance from `p` to segment `ab`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0) };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_is_its_endpoints() {
        let l = Curve::line([0.0, 0.0], [1.0, 0.0]);
        assert_eq!(discretize_curve(&l, 1e-3).unwrap(), vec![[0.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn semicircle_lies_on_circumcircle() {
        let tol = 1.0 / 256.0;
        let arc = Curve::arc([0.0, 0.0], [1.0, 1.0], [2.0, 0.0]);
        let pts = discretize_curve(&arc, tol).unwrap();
        assert_eq!(pts[0], [0.0, 0.0]);
        assert_eq!(*pts.last().unwrap(), [2.0, 0.0]);
        for p in &pts {
            assert!((dist(*p, [1.0, 0.0]) - 1.0).abs() < 1e-12);
            assert!(p[1] >= -1e-12, "went the wrong way round");
        }
        for w in pts.windows(2) {
            let m = [(w[0][0] + w[1][0]) / 2.0, (w[0][1] + w[1][1]) / 2.0];
            assert!(1.0 - dist(m, [1.0, 0.0]) <= tol + 1e-12);
        }
    }

    #[test]
    fn clockwise_arc_goes_through_mid() {
        let arc = Curve::arc([2.0, 0.0], [1.0, 1.0], [0.0, 0.0]);
        let pts = discretize_curve(&arc, 1e-3).unwrap();
        assert!(pts.iter().all(|p| p[1] >= -1e-12));
        let big = Curve::arc([1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]);
        let pts = discretize_curve(&big, 1e-3).unwrap();
        assert!(pts.iter().any(|p| p[1] < -0.9));
    }

    #[test]
    fn circle_from_diameters() {
        let c = Curve { kind: CurveKind::Circle, points: vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] };
        let pts = discretize_curve(&c, 1e-3).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let q = pts[(i + 1) % pts.len()];
            let m = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
            assert!((dist(*p, [0.0, 0.0]) - 1.0).abs() <= 1e-3);
            assert!((dist(m, [0.0, 0.0]) - 1.0).abs() <= 1e-3);
        }
        assert!((signed_area(&pts) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn collinear_arc_is_degenerate() {
        let arc = Curve::arc([0.0, 0.0], [1.0, 0.0], [2.0, 0.0]);
        assert_eq!(discretize_curve(&arc, 1e-3), Err(DegenerateCurve::CollinearArc));
    }

    #[test]
    fn bowtie_self_intersects() {
        let bow = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(polygon_self_intersects(&bow));
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(!polygon_self_intersects(&sq));
        assert!(point_in_polygon([0.5, 0.5], &sq));
        assert!(!point_in_polygon([1.5, 0.5], &sq));
        assert_eq!(signed_area(&sq), 1.0);
    }
}
