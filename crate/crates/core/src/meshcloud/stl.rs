//! Binary STL: 80-byte header, little-endian facet count, 50-byte facets.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::mesh::TriMesh;
use crate::error::{Error, Result};
use crate::scalar::{norm3, Scalar};

const HEADER: &[u8] = b"tactag binary STL";

pub fn encode_stl<T: Scalar>(mesh: &TriMesh<T>) -> Result<Vec<u8>> {
    if mesh.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut out = Vec::with_capacity(84 + 50 * mesh.faces.len());
    let mut header = [0u8; 80];
    header[..HEADER.len()].copy_from_slice(HEADER);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.faces.len() as u32).to_le_bytes());
    for f in 0..mesh.faces.len() {
        let n = mesh.face_normal(f);
        let len = norm3(n);
        let unit = if len > T::zero() {
            n.map(|c| c / len)
        } else {
            [T::zero(); 3]
        };
        for c in unit {
            out.extend_from_slice(&(c.as_f64() as f32).to_le_bytes());
        }
        for v in mesh.face_points(f) {
            for c in v {
                out.extend_from_slice(&(c.as_f64() as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    Ok(out)
}

/// Writes a closed mesh as binary STL.
pub fn export_stl<T: Scalar>(mesh: &TriMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if !mesh.faces.is_empty() && !mesh.is_closed() {
        return Err(Error::Degenerate("mesh is not watertight".into()));
    }
    let bytes = encode_stl(mesh)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parses binary STL, merging bit-identical vertices.
pub fn decode_stl<T: Scalar>(bytes: &[u8], path: &Path) -> Result<TriMesh<T>> {
    if bytes.len() < 84 {
        return Err(Error::corrupt(path, "shorter than the STL header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() != 84 + 50 * count {
        return Err(Error::corrupt(
            path,
            format!("{} bytes for {count} facets", bytes.len()),
        ));
    }
    let f32_at = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let mut index: HashMap<[u32; 3], usize> = HashMap::new();
    let mut mesh = TriMesh::default();
    for i in 0..count {
        let base = 84 + 50 * i + 12;
        let mut face = [0usize; 3];
        for (k, slot) in face.iter_mut().enumerate() {
            let xyz = [0, 1, 2].map(|c| f32_at(base + 12 * k + 4 * c));
            let key = xyz.map(f32::to_bits);
            *slot = *index.entry(key).or_insert_with(|| {
                mesh.vertices.push(xyz.map(|c| T::lit(c as f64)));
                mesh.vertices.len() - 1
            });
        }
        mesh.faces.push(face);
    }
    Ok(mesh)
}

pub fn import_stl<T: Scalar>(path: impl AsRef<Path>) -> Result<TriMesh<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_stl(&bytes, path)
}
