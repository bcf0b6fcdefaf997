//! Point clouds with optional normals and masks, plus ASCII PLY / XYZ I/O.

use crate::math::Vec3;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed point file at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("normals length {normals} does not match {points} points")]
    NormalCount { points: usize, normals: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
    pub mask: Option<Vec<bool>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud { points, normals: None, mask: None }
    }

    pub fn with_normals(points: Vec<Vec3>, normals: Vec<Vec3>) -> Self {
        assert_eq!(points.len(), normals.len(), "one normal per point");
        PointCloud { points, normals: Some(normals), mask: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Axis-aligned bounds, `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = self.points.first()?;
        let mut lo = *first;
        let mut hi = *first;
        for p in &self.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        Some((lo, hi))
    }

    /// Longest bounding-box side, 0 for an empty cloud.
    pub fn extent(&self) -> f64 {
        self.bounds().map_or(0.0, |(lo, hi)| (hi - lo).max())
    }

    /// New cloud made of the given indices (normals follow, mask is dropped).
    pub fn select(&self, idx: &[usize]) -> PointCloud {
        PointCloud {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            normals: self.normals.as_ref().map(|n| idx.iter().map(|&i| n[i]).collect()),
            mask: None,
        }
    }

    pub fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(f).collect(),
            normals: self.normals.clone(),
            mask: self.mask.clone(),
        }
    }

    pub fn to_ply(&self) -> String {
        let mut s = String::new();
        s.push_str("ply\nformat ascii 1.0\n");
        let _ = writeln!(s, "element vertex {}", self.points.len());
        s.push_str("property double x\nproperty double y\nproperty double z\n");
        if self.normals.is_some() {
            s.push_str("property double nx\nproperty double ny\nproperty double nz\n");
        }
        s.push_str("end_header\n");
        for (i, p) in self.points.iter().enumerate() {
            let _ = write!(s, "{} {} {}", p.x, p.y, p.z);
            if let Some(n) = &self.normals {
                let _ = write!(s, " {} {} {}", n[i].x, n[i].y, n[i].z);
            }
            s.push('\n');
        }
        s
    }

    pub fn write_ply(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(self.to_ply().as_bytes())
    }

    /// Reads ASCII PLY with `x y z` and optional `nx ny nz` vertex properties.
    pub fn read_ply(r: impl Read) -> Result<PointCloud, CloudError> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines().enumerate();
        let mut count = None;
        let mut props: Vec<String> = Vec::new();
        let mut in_vertex = false;
        let mut saw_magic = false;
        for (ln, line) in lines.by_ref() {
            let line = line?;
            let t: Vec<&str> = line.split_whitespace().collect();
            match t.as_slice() {
                ["ply"] => saw_magic = true,
                ["format", fmt, ..] => {
                    if *fmt != "ascii" {
                        return Err(CloudError::Format { line: ln + 1, msg: format!("unsupported format {fmt}") });
                    }
                }
                ["element", "vertex", n] => {
                    in_vertex = true;
                    count = Some(n.parse::<usize>().map_err(|e| CloudError::Format {
                        line: ln + 1,
                        msg: e.to_string(),
                    })?);
                }
                ["element", ..] => in_vertex = false,
                ["property", _, name] if in_vertex => props.push(name.to_string()),
                ["end_header"] => break,
                _ => {}
            }
        }
        if !saw_magic {
            return Err(CloudError::Format { line: 1, msg: "missing ply magic".into() });
        }
        let count = count.ok_or(CloudError::Format { line: 0, msg: "no vertex element".into() })?;
        let find = |n: &str| props.iter().position(|p| p == n);
        let (ix, iy, iz) = match (find("x"), find("y"), find("z")) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(CloudError::Format { line: 0, msg: "missing x/y/z properties".into() }),
        };
        let nidx = match (find("nx"), find("ny"), find("nz")) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        };
        let mut points = Vec::with_capacity(count);
        let mut normals = nidx.map(|_| Vec::with_capacity(count));
        for (ln, line) in lines {
            if points.len() == count {
                break;
            }
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = parse_floats(&line, ln + 1)?;
            if vals.len() < props.len() {
                return Err(CloudError::Format { line: ln + 1, msg: "too few vertex values".into() });
            }
            points.push(Vec3::new(vals[ix], vals[iy], vals[iz]));
            if let (Some(ns), Some((a, b, c))) = (normals.as_mut(), nidx) {
                ns.push(Vec3::new(vals[a], vals[b], vals[c]));
            }
        }
        if points.len() != count {
            return Err(CloudError::Format {
                line: 0,
                msg: format!("header declares {count} vertices, found {}", points.len()),
            });
        }
        Ok(PointCloud { points, normals, mask: None })
    }

    /// Plain `x y z [nx ny nz]` lines.
    pub fn to_xyz(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.points.iter().enumerate() {
            let _ = write!(s, "{} {} {}", p.x, p.y, p.z);
            if let Some(n) = &self.normals {
                let _ = write!(s, " {} {} {}", n[i].x, n[i].y, n[i].z);
            }
            s.push('\n');
        }
        s
    }

    pub fn read_xyz(r: impl Read) -> Result<PointCloud, CloudError> {
        let mut points = Vec::new();
        let mut normals: Vec<Vec3> = Vec::new();
        let mut with_normals = None;
        for (ln, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let v = parse_floats(&line, ln + 1)?;
            let has_n = match v.len() {
                3 => false,
                6 => true,
                k => {
                    return Err(CloudError::Format { line: ln + 1, msg: format!("expected 3 or 6 values, got {k}") })
                }
            };
            if *with_normals.get_or_insert(has_n) != has_n {
                return Err(CloudError::Format { line: ln + 1, msg: "inconsistent column count".into() });
            }
            points.push(Vec3::new(v[0], v[1], v[2]));
            if has_n {
                normals.push(Vec3::new(v[3], v[4], v[5]));
            }
        }
        let normals = (with_normals == Some(true)).then_some(normals);
        Ok(PointCloud { points, normals, mask: None })
    }
}

fn parse_floats(line: &str, ln: usize) -> Result<Vec<f64>, CloudError> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| CloudError::Format { line: ln, msg: format!("{t:?}: {e}") })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PointCloud {
        PointCloud::with_normals(
            vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(-1.0, 2.5, 1e-7)],
            vec![Vec3::z(), -Vec3::x()],
        )
    }

    #[test]
    fn ply_round_trip_is_exact() {
        let c = sample();
        let back = PointCloud::read_ply(c.to_ply().as_bytes()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn ply_header_count_matches() {
        let text = sample().to_ply();
        assert!(text.contains("element vertex 2\n"));
    }

    #[test]
    fn ply_without_normals() {
        let c = PointCloud::new(vec![Vec3::new(1.0, 2.0, 3.0)]);
        let back = PointCloud::read_ply(c.to_ply().as_bytes()).unwrap();
        assert!(back.normals.is_none());
        assert_eq!(back.points, c.points);
    }

    #[test]
    fn ply_truncated_body_is_rejected() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n";
        assert!(PointCloud::read_ply(text.as_bytes()).is_err());
    }

    #[test]
    fn xyz_round_trip() {
        let c = sample();
        assert_eq!(PointCloud::read_xyz(c.to_xyz().as_bytes()).unwrap(), c);
    }
}
