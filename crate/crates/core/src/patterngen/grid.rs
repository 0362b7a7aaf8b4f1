use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::delaunay::delaunay;
use crate::error::{Error, Result};
use crate::scalar::{cross2, Point2, Scalar};

/// Delaunay triangulation of a staggered-row point lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriGrid<T> {
    pub divisions: usize,
    /// Side length of the square in grid units.
    pub extent: T,
    pub points: Vec<Point2<T>>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Edge-sharing neighbours of each triangle, ascending.
    pub adjacency: Vec<Vec<usize>>,
}

/// Staggered lattice of `divisions + 1` rows spanning `[0, extent]^2`.
///
/// Even rows hold `divisions + 1` evenly spaced points. Odd rows are shifted
/// by half a column pitch and keep the two boundary points so the hull stays
/// the full square.
pub fn staggered_points<T: Scalar>(divisions: usize, extent: T) -> Vec<Point2<T>> {
    let pitch = extent / T::from_usize_lossy(divisions);
    let half = pitch / T::lit(2.0);
    let mut pts = Vec::new();
    for row in 0..=divisions {
        let y = pitch * T::from_usize_lossy(row);
        if row % 2 == 0 {
            for col in 0..=divisions {
                pts.push([pitch * T::from_usize_lossy(col), y]);
            }
        } else {
            pts.push([T::zero(), y]);
            for col in 0..divisions {
                pts.push([pitch * T::from_usize_lossy(col) + half, y]);
            }
            pts.push([extent, y]);
        }
    }
    pts
}

pub fn build_staggered_grid<T: Scalar>(divisions: usize, extent: T) -> Result<TriGrid<T>> {
    if divisions < 2 {
        return Err(Error::invalid(format!(
            "grid needs at least 2 divisions, got {divisions}"
        )));
    }
    if !(extent > T::zero()) || !extent.is_finite() {
        return Err(Error::invalid("grid extent must be positive"));
    }
    let points = staggered_points(divisions, extent);
    let triangles = delaunay(&points)?;
    let adjacency = edge_adjacency(&triangles);
    Ok(TriGrid {
        divisions,
        extent,
        points,
        triangles,
        adjacency,
    })
}

pub(crate) fn edge_adjacency(triangles: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (ti, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push(ti);
        }
    }
    let mut adjacency = vec![Vec::new(); triangles.len()];
    for owners in by_edge.values() {
        if let [a, b] = owners[..] {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    adjacency
}

impl<T: Scalar> TriGrid<T> {
    pub fn id(&self) -> String {
        format!("staggered-{}", self.divisions)
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, index: usize) -> [Point2<T>; 3] {
        let t = self.triangles[index];
        [self.points[t[0]], self.points[t[1]], self.points[t[2]]]
    }

    pub fn triangle_area(&self, index: usize) -> T {
        let [a, b, c] = self.triangle_points(index);
        cross2(a, b, c) / T::lit(2.0)
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.triangles.len() {
            Ok(())
        } else {
            Err(Error::InvalidTriangle {
                index,
                count: self.triangles.len(),
            })
        }
    }
}
