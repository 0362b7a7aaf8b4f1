//! ASCII PLY 1.0 point clouds with `x y z` vertex coordinates in millimetres.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::meshcloud::PointCloud;
use crate::scalar::Scalar;

pub fn encode_ply<T: Scalar>(cloud: &PointCloud<T>) -> String {
    let pts: Vec<_> = cloud.valid_points().collect();
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\ncomment units mm\n");
    let _ = writeln!(s, "element vertex {}", pts.len());
    s.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    for p in pts {
        let _ = writeln!(s, "{} {} {}", p[0].as_f64(), p[1].as_f64(), p[2].as_f64());
    }
    s
}

pub fn write_ply<T: Scalar>(cloud: &PointCloud<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ply(cloud)).map_err(|e| Error::io(path, e))
}

/// Parses ASCII PLY. Extra vertex properties are ignored; other elements
/// after the vertices are skipped.
pub fn decode_ply<T: Scalar>(text: &str, path: &Path) -> Result<PointCloud<T>> {
    let bad = |why: &str| Error::corrupt(path, why.to_owned());
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(bad("missing ply magic"));
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    let mut seen_vertex = false;
    for line in lines.by_ref() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(bad("only ascii PLY is supported"))
            }
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| bad("bad vertex count"))?);
                in_vertex = true;
                seen_vertex = true;
            }
            ["element", ..] => {
                if !seen_vertex {
                    return Err(bad("vertex element must come first"));
                }
                in_vertex = false;
            }
            ["property", .., name] if in_vertex => props.push((*name).to_owned()),
            ["end_header"] => break,
            _ => {}
        }
    }
    let count = count.ok_or_else(|| bad("no vertex element"))?;
    let col = |name: &str| {
        props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| bad("vertex lacks x/y/z"))
    };
    let (ix, iy, iz) = (col("x")?, col("y")?, col("z")?);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next().ok_or_else(|| bad("truncated vertex list"))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("non-numeric vertex value"))?;
        if vals.len() < props.len() {
            return Err(bad("short vertex record"));
        }
        points.push([vals[ix], vals[iy], vals[iz]].map(T::lit));
    }
    Ok(PointCloud::new(points))
}

pub fn read_ply<T: Scalar>(path: impl AsRef<Path>) -> Result<PointCloud<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_ply(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn extra_properties_are_ignored() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float nx\nproperty float x\nproperty float y\nproperty float z\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n9 1 2 3\n9 4 5 6\n";
        let c: PointCloud<f64> = decode_ply(text, Path::new("t")).unwrap();
        assert_eq!(c.points, vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
    }

    #[test]
    fn truncated_is_corrupt() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n";
        assert!(decode_ply::<f64>(text, Path::new("t")).is_err());
        assert!(decode_ply::<f64>("obj\n", Path::new("t")).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_exact(pts in prop::collection::vec(prop::array::uniform3(-1e3f64..1e3), 0..50)) {
            let c = PointCloud::new(pts);
            let back: PointCloud<f64> = decode_ply(&encode_ply(&c), Path::new("t")).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
