use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::mesh::{pattern_to_mesh, subdivide};
use crate::error::{Error, Result};
use crate::patterngen::{Pattern, TriGrid};
use crate::scalar::{Point3, Scalar};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud<T> {
    /// Millimetres.
    pub points: Vec<Point3<T>>,
    /// Per-point validity; `None` means every point is valid.
    pub valid: Option<Vec<bool>>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Vec<Point3<T>>) -> Self {
        Self {
            points,
            valid: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn valid_points(&self) -> impl Iterator<Item = &Point3<T>> {
        self.points
            .iter()
            .enumerate()
            .filter(|(i, _)| self.valid.as_ref().is_none_or(|v| v[*i]))
            .map(|(_, p)| p)
    }

    pub fn centroid(&self) -> Option<Point3<T>> {
        let mut sum = [T::zero(); 3];
        let mut n = 0usize;
        for p in self.valid_points() {
            for k in 0..3 {
                sum[k] += p[k];
            }
            n += 1;
        }
        (n > 0).then(|| sum.map(|s| s / T::from_usize_lossy(n)))
    }
}

/// Replaces the valid points of each occupied voxel by their centroid.
/// Output is ordered by voxel index.
pub fn voxel_downsample<T: Scalar>(cloud: &PointCloud<T>, voxel_mm: T) -> Result<PointCloud<T>> {
    if !(voxel_mm > T::zero()) {
        return Err(Error::invalid("voxel size must be positive"));
    }
    let mut cells: BTreeMap<[i64; 3], ([T; 3], usize)> = BTreeMap::new();
    for p in cloud.valid_points() {
        let key = p.map(|c| (c / voxel_mm).floor().to_i64().unwrap_or(i64::MAX));
        let cell = cells.entry(key).or_insert(([T::zero(); 3], 0));
        for (acc, v) in cell.0.iter_mut().zip(p) {
            *acc += *v;
        }
        cell.1 += 1;
    }
    Ok(PointCloud::new(
        cells
            .into_values()
            .map(|(s, n)| s.map(|v| v / T::from_usize_lossy(n)))
            .collect(),
    ))
}

/// How a library pattern becomes its registration cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec<T> {
    pub scale_mm: T,
    pub depth_mm: T,
    /// Maximum edge length after subdivision, in grid units.
    pub subdivision: T,
    pub voxel_mm: T,
    /// Keep every mesh vertex instead of only the contact (top) face.
    pub full_prism: bool,
}

impl<T: Scalar> Default for CloudSpec<T> {
    fn default() -> Self {
        Self {
            scale_mm: T::lit(5.0),
            depth_mm: T::lit(1.0),
            subdivision: T::lit(0.1),
            voxel_mm: T::lit(0.2),
            full_prism: false,
        }
    }
}

/// Extrude, subdivide, keep the contact face vertices and voxelize.
pub fn pattern_cloud<T: Scalar>(
    pattern: &Pattern,
    grid: &TriGrid<T>,
    spec: &CloudSpec<T>,
) -> Result<PointCloud<T>> {
    let mesh = pattern_to_mesh(pattern, grid, spec.scale_mm, spec.depth_mm)?;
    let max_edge = spec.subdivision * spec.scale_mm / grid.extent;
    let fine = subdivide(&mesh, max_edge)?;
    let tol = spec.depth_mm * T::lit(1e-9);
    let points = fine
        .vertices
        .into_iter()
        .filter(|v| spec.full_prism || (v[2] - spec.depth_mm).abs() <= tol)
        .collect();
    voxel_downsample(&PointCloud::new(points), spec.voxel_mm)
}
