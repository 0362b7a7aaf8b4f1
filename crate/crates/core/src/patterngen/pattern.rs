use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::grid::TriGrid;
use crate::error::{Error, Result};
use crate::scalar::{Point2, Scalar};

/// A set of filled grid triangles. One pattern identifies one part.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    triangle_ids: Vec<usize>,
    grid_id: String,
}

impl Pattern {
    /// Builds a pattern, sorting the ids. Duplicates and out-of-range
    /// indices are rejected.
    pub fn new<T: Scalar>(mut triangle_ids: Vec<usize>, grid: &TriGrid<T>) -> Result<Self> {
        for &i in &triangle_ids {
            grid.check_index(i)?;
        }
        triangle_ids.sort_unstable();
        if triangle_ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("pattern contains a repeated triangle"));
        }
        Ok(Self {
            triangle_ids,
            grid_id: grid.id(),
        })
    }

    pub fn triangle_ids(&self) -> &[usize] {
        &self.triangle_ids
    }

    pub fn n(&self) -> usize {
        self.triangle_ids.len()
    }

    pub fn grid_id(&self) -> &str {
        &self.grid_id
    }

    pub fn is_empty(&self) -> bool {
        self.triangle_ids.is_empty()
    }
}

/// Number of selected triangles that share an edge with another selected
/// triangle, found by breadth-first search over the induced subgraph.
pub fn connectivity<T: Scalar>(pattern: &Pattern, grid: &TriGrid<T>) -> Result<usize> {
    let mut selected = vec![false; grid.triangle_count()];
    for &i in pattern.triangle_ids() {
        grid.check_index(i)?;
        selected[i] = true;
    }
    Ok(connectivity_of_selection(&selected, &grid.adjacency))
}

pub(crate) fn connectivity_of_selection(selected: &[bool], adjacency: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; selected.len()];
    let mut queue = VecDeque::new();
    let mut connected = 0;
    for start in 0..selected.len() {
        if !selected[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut component = 0;
        while let Some(t) = queue.pop_front() {
            component += 1;
            for &nb in &adjacency[t] {
                if selected[nb] && !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        if component > 1 {
            connected += component;
        }
    }
    connected
}

/// Selected triangles in millimetres, scaled so the grid spans `scale_mm`
/// and centred on the grid centre.
pub fn pattern_triangles_mm<T: Scalar>(
    pattern: &Pattern,
    grid: &TriGrid<T>,
    scale_mm: T,
) -> Result<Vec<[Point2<T>; 3]>> {
    if pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let k = scale_mm / grid.extent;
    let half = scale_mm / T::lit(2.0);
    pattern
        .triangle_ids()
        .iter()
        .map(|&i| {
            grid.check_index(i)?;
            Ok(grid
                .triangle_points(i)
                .map(|p| [p[0] * k - half, p[1] * k - half]))
        })
        .collect()
}
