//! Boundary tracing on a binary raster.

use super::profile::Profile;
use std::collections::HashMap;

/// Closed lattice polygon; outer boundaries are counter-clockwise, holes
/// clockwise.
pub type Contour = Vec<[i64; 2]>;

/// Traces every boundary with the filled side on the left. Diagonally
/// touching cells stay separate (4-connected foreground).
pub fn trace_contours(p: &Profile) -> Vec<Contour> {
    let mut edges: Vec<([i64; 2], [i64; 2])> = Vec::new();
    for j in 0..p.ny as i64 {
        for i in 0..p.nx as i64 {
            if !p.is_filled(i as isize, j as isize) {
                continue;
            }
            let f = |di: i64, dj: i64| p.is_filled((i + di) as isize, (j + dj) as isize);
            if !f(0, -1) {
                edges.push(([i, j], [i + 1, j]));
            }
            if !f(1, 0) {
                edges.push(([i + 1, j], [i + 1, j + 1]));
            }
            if !f(0, 1) {
                edges.push(([i + 1, j + 1], [i, j + 1]));
            }
            if !f(-1, 0) {
                edges.push(([i, j + 1], [i, j]));
            }
        }
    }
    let mut from: HashMap<[i64; 2], Vec<usize>> = HashMap::new();
    for (k, e) in edges.iter().enumerate() {
        from.entry(e.0).or_default().push(k);
    }
    let mut used = vec![false; edges.len()];
    let mut out = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut contour = Vec::new();
        let mut cur = start;
        loop {
            used[cur] = true;
            let (a, b) = edges[cur];
            contour.push(a);
            let dir = [b[0] - a[0], b[1] - a[1]];
            let next = from.get(&b).and_then(|cands| {
                cands.iter().copied().filter(|&c| !used[c] || c == start).max_by_key(|&c| {
                    let e = edges[c];
                    let d = [e.1[0] - e.0[0], e.1[1] - e.0[1]];
                    // Cross product: +1 left turn, 0 straight, -1 right turn.
                    dir[0] * d[1] - dir[1] * d[0]
                })
            });
            match next {
                Some(n) if n == start => break,
                Some(n) => cur = n,
                None => break,
            }
        }
        out.push(contour);
    }
    out
}

/// Twice the signed area of a lattice polygon.
pub fn doubled_area(c: &Contour) -> i64 {
    let n = c.len();
    (0..n).map(|k| c[k][0] * c[(k + 1) % n][1] - c[(k + 1) % n][0] * c[k][1]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;

    fn raster(rows: &[&str]) -> Profile {
        let ny = rows.len();
        let nx = rows[0].len();
        let mut filled = vec![false; nx * ny];
        for (r, row) in rows.iter().enumerate() {
            let j = ny - 1 - r;
            for (i, ch) in row.chars().enumerate() {
                filled[j * nx + i] = ch == '#';
            }
        }
        Profile {
            u: Vec3::x(),
            v: Vec3::y(),
            n: Vec3::z(),
            offset: 0.0,
            origin: [0.0, 0.0],
            cell: 1.0,
            nx,
            ny,
            filled,
            slab_points: 0,
        }
    }

    #[test]
    fn square_with_hole() {
        let p = raster(&["......", ".####.", ".#..#.", ".#..#.", ".####.", "......"]);
        let mut cs = trace_contours(&p);
        cs.sort_by_key(|c| -doubled_area(c));
        assert_eq!(cs.len(), 2);
        assert_eq!(doubled_area(&cs[0]), 32);
        assert_eq!(doubled_area(&cs[1]), -8);
    }

    #[test]
    fn diagonal_cells_are_separate() {
        let p = raster(&["....", ".#..", "..#.", "...."]);
        let cs = trace_contours(&p);
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().all(|c| c.len() == 4 && doubled_area(c) == 2));
    }
}
