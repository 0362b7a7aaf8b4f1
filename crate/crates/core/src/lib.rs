//! Tactile tag patterns for 3D-printed parts: generation, recognition from a
//! contact imprint, and planar pose refinement.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar for common use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod imprintsim;
pub mod meshcloud;
pub mod patterngen;
pub mod persist;
pub mod registration;
pub mod scalar;
pub mod shapemetrics;

pub use error::{Error, Result};
pub use scalar::{Point2, Point3, Scalar};

pub type TriGrid64 = patterngen::TriGrid<f64>;
pub type TriGrid32 = patterngen::TriGrid<f32>;
pub type Mask64 = shapemetrics::Mask<f64>;
pub type Mask32 = shapemetrics::Mask<f32>;
pub type HuSignature64 = shapemetrics::HuSignature<f64>;
pub type HuSignature32 = shapemetrics::HuSignature<f32>;
pub type PatternLibrary64 = shapemetrics::PatternLibrary<f64>;
pub type PatternLibrary32 = shapemetrics::PatternLibrary<f32>;
pub type LibraryConfig64 = shapemetrics::LibraryConfig<f64>;
pub type LibraryConfig32 = shapemetrics::LibraryConfig<f32>;
pub type TriMesh64 = meshcloud::TriMesh<f64>;
pub type TriMesh32 = meshcloud::TriMesh<f32>;
pub type PointCloud64 = meshcloud::PointCloud<f64>;
pub type PointCloud32 = meshcloud::PointCloud<f32>;
pub type RigidTransform2D64 = registration::RigidTransform2D<f64>;
pub type RigidTransform2D32 = registration::RigidTransform2D<f32>;
pub type RegistrationParams64 = registration::RegistrationParams<f64>;
pub type RefinementResult64 = registration::RefinementResult<f64>;
pub type SensorSpec64 = imprintsim::SensorSpec<f64>;
pub type Perturbation64 = imprintsim::Perturbation<f64>;
