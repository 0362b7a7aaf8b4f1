//! Triangulated grid construction and pattern synthesis by simulated annealing.

mod anneal;
mod delaunay;
mod grid;
mod pattern;

pub use anneal::{
    anneal_pattern, anneal_pattern_with_rng, sample_generation_params, AnnealOutcome,
    AnnealSchedule,
};
pub use delaunay::delaunay;
pub use grid::{build_staggered_grid, staggered_points, TriGrid};
pub use pattern::{connectivity, pattern_triangles_mm, Pattern};
