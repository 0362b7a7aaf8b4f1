//! Planar rigid registration of library clouds onto imprint clouds.

mod refine;
mod register;
mod transform;

pub use refine::{centroid_align, initial_align, refine_pose, RefineOptions};
pub use register::{
    nearest_rmse, register, Method, RefinementResult, RegistrationParams, MIN_POINTS,
};
pub use transform::{normalize_degrees, RigidTransform2D};
