//! Pattern solids, subdivision, voxelized registration clouds and STL export.

mod cloud;
mod mesh;
mod stl;

pub use cloud::{pattern_cloud, voxel_downsample, CloudSpec, PointCloud};
pub use mesh::{pattern_to_mesh, subdivide, TriMesh};
pub use stl::{decode_stl, encode_stl, export_stl, import_stl};
