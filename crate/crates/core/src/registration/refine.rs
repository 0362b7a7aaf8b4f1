use serde::{Deserialize, Serialize};

use super::register::{register, RefinementResult, RegistrationParams};
use super::transform::RigidTransform2D;
use crate::error::{Error, Result};
use crate::meshcloud::{voxel_downsample, PointCloud};
use crate::scalar::Scalar;
use crate::shapemetrics::{LibraryEntry, Mask};

/// Translation taking the source centroid onto the centre of the mask's
/// bounding box.
pub fn initial_align<T: Scalar>(
    source: &PointCloud<T>,
    imprint_mask: &Mask<T>,
) -> Result<RigidTransform2D<T>> {
    let c = source.centroid().ok_or(Error::EmptyCloud)?;
    let b = imprint_mask.bbox_center_mm().ok_or(Error::EmptyMask)?;
    Ok(RigidTransform2D::translation(b[0] - c[0], b[1] - c[1]))
}

/// Translation taking the source centroid onto the target centroid.
pub fn centroid_align<T: Scalar>(
    source: &PointCloud<T>,
    target: &PointCloud<T>,
) -> Result<RigidTransform2D<T>> {
    let s = source.centroid().ok_or(Error::EmptyCloud)?;
    let t = target.centroid().ok_or(Error::EmptyCloud)?;
    Ok(RigidTransform2D::translation(t[0] - s[0], t[1] - s[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions<T> {
    pub params: RegistrationParams<T>,
    /// Voxel size applied to the imprint cloud before registration; `None` keeps it raw.
    pub target_voxel_mm: Option<T>,
}

impl<T: Scalar> Default for RefineOptions<T> {
    fn default() -> Self {
        Self {
            params: RegistrationParams::default(),
            target_voxel_mm: Some(T::lit(0.2)),
        }
    }
}

/// Bounding-box initialisation followed by registration of the entry's
/// cloud onto the imprint cloud. `y_ref` is the total Y translation.
pub fn refine_pose<T: Scalar>(
    imprint_cloud: &PointCloud<T>,
    imprint_mask: &Mask<T>,
    entry: &LibraryEntry<T>,
    options: &RefineOptions<T>,
) -> Result<RefinementResult<T>> {
    if imprint_cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let init = initial_align(&entry.cloud, imprint_mask)?;
    let target = match options.target_voxel_mm {
        Some(v) => voxel_downsample(imprint_cloud, v)?,
        None => imprint_cloud.clone(),
    };
    register(&entry.cloud, &target, init, &options.params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_source_maps_to_bbox_centre() {
        let src = PointCloud::new(vec![
            [-1.0, -1.0, 1.0],
            [1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0],
            [-1.0, 1.0, 1.0],
        ]);
        // Box spanning pixel centres 1.05..1.35 in x and -0.65..-0.35 in y.
        let mut m = Mask::new(40, 40, 0.1f64, [-2.0, -2.0]).unwrap();
        for (x, y) in [(30, 13), (33, 16), (31, 15)] {
            m.set(x, y, true);
        }
        let t = initial_align(&src, &m).unwrap();
        assert!((t.tx - 1.2).abs() < 1e-12 && (t.ty + 0.5).abs() < 1e-12);
        assert_eq!(t.theta_z, 0.0);
    }

    #[test]
    fn already_centred_is_identity() {
        let src = PointCloud::new(vec![[0.05, 0.05, 0.0], [0.15, 0.15, 0.0]]);
        let mut m = Mask::new(4, 4, 0.1f64, [0.0, 0.0]).unwrap();
        m.set(0, 0, true);
        m.set(1, 1, true);
        let t = initial_align(&src, &m).unwrap();
        assert!(t.tx.abs() < 1e-15 && t.ty.abs() < 1e-15);
    }

    #[test]
    fn empty_inputs_fail() {
        let m = Mask::new(4, 4, 0.1f64, [0.0, 0.0]).unwrap();
        let c = PointCloud::new(vec![[0.0, 0.0, 0.0]]);
        assert!(matches!(initial_align(&c, &m), Err(Error::EmptyMask)));
        let mut m2 = m.clone();
        m2.set(1, 1, true);
        assert!(matches!(
            initial_align(&PointCloud::default(), &m2),
            Err(Error::EmptyCloud)
        ));
    }
}
