use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meshcloud::PointCloud;
use crate::patterngen::pattern_triangles_mm;
use crate::registration::RigidTransform2D;
use crate::scalar::{Point2, Scalar};
use crate::shapemetrics::{rasterize_triangles, Mask, PatternLibrary};

/// Simulated vision-based tactile sensor. The frame is centred on the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec<T> {
    pub width_mm: T,
    pub height_mm: T,
    pub pitch: T,
    pub depth_mm: T,
    pub depth_noise_sigma: T,
    pub dropout_fraction: T,
}

impl<T: Scalar> Default for SensorSpec<T> {
    fn default() -> Self {
        Self {
            width_mm: T::lit(18.6),
            height_mm: T::lit(14.3),
            pitch: T::lit(0.05),
            depth_mm: T::lit(1.0),
            depth_noise_sigma: T::lit(0.02),
            dropout_fraction: T::lit(0.05),
        }
    }
}

impl<T: Scalar> SensorSpec<T> {
    pub fn noiseless() -> Self {
        Self {
            depth_noise_sigma: T::zero(),
            dropout_fraction: T::zero(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pitch > T::zero())
            || !(self.width_mm > T::zero())
            || !(self.height_mm > T::zero())
        {
            return Err(Error::invalid("sensor window and pitch must be positive"));
        }
        if !(self.dropout_fraction >= T::zero() && self.dropout_fraction < T::one()) {
            return Err(Error::invalid("dropout fraction must lie in [0, 1)"));
        }
        if !(self.depth_noise_sigma >= T::zero()) {
            return Err(Error::invalid("depth noise must be non-negative"));
        }
        Ok(())
    }

    pub fn pixels(&self) -> (usize, usize) {
        let px = |mm: T| (mm / self.pitch).round().to_usize().unwrap_or(0);
        (px(self.width_mm), px(self.height_mm))
    }
}

/// Pose error of the grasped part relative to nominal: a rotation about the
/// pattern centre followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Perturbation<T> {
    pub x: T,
    pub y: T,
    pub theta_z: T,
}

impl<T: Scalar> Perturbation<T> {
    pub fn new(x: T, y: T, theta_z: T) -> Self {
        Self { x, y, theta_z }
    }

    pub fn transform(&self) -> RigidTransform2D<T> {
        RigidTransform2D::new(self.x, self.y, self.theta_z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRanges<T> {
    pub x: (T, T),
    pub y: (T, T),
    pub theta_z: (T, T),
}

impl<T: Scalar> Default for PerturbationRanges<T> {
    fn default() -> Self {
        let t = T::lit(2.5);
        let a = T::lit(3.0);
        Self {
            x: (-t, t),
            y: (-t, t),
            theta_z: (-a, a),
        }
    }
}

impl<T: Scalar> PerturbationRanges<T> {
    pub fn zero() -> Self {
        Self {
            x: (T::zero(), T::zero()),
            y: (T::zero(), T::zero()),
            theta_z: (T::zero(), T::zero()),
        }
    }

    pub fn y_only(y: T) -> Self {
        Self {
            y: (y, y),
            ..Self::zero()
        }
    }
}

fn uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R, (lo, hi): (T, T)) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * T::lit(u)
}

/// Independent uniform draws per axis.
pub fn sample_perturbation<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    ranges: &PerturbationRanges<T>,
) -> Perturbation<T> {
    Perturbation {
        x: uniform(rng, ranges.x),
        y: uniform(rng, ranges.y),
        theta_z: uniform(rng, ranges.theta_z),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImprint<T> {
    pub mask: Mask<T>,
    pub cloud: PointCloud<T>,
    /// Part of the pattern fell outside the sensor window.
    pub partial: bool,
}

/// Renders the imprint of a library entry under `pert`.
///
/// The cloud holds one point per set pixel centre at the imprint depth plus
/// Gaussian noise, after independent dropout of each point.
pub fn render_imprint<T: Scalar, R: Rng + ?Sized>(
    library: &PatternLibrary<T>,
    index: usize,
    pert: &Perturbation<T>,
    sensor: &SensorSpec<T>,
    rng: &mut R,
) -> Result<RenderedImprint<T>> {
    sensor.validate()?;
    let entry = library
        .entries
        .get(index)
        .ok_or_else(|| Error::invalid(format!("no library entry {index}")))?;
    let pose = pert.transform();
    let tris: Vec<[Point2<T>; 3]> =
        pattern_triangles_mm(&entry.pattern, &library.grid, library.config.scale_mm)?
            .into_iter()
            .map(|t| t.map(|p| pose.apply(p)))
            .collect();

    let (w, h) = sensor.pixels();
    let mut mask = Mask::centered(w, h, sensor.pitch)?;
    rasterize_triangles(&tris, &mut mask);
    if mask.is_empty() {
        return Err(Error::OutsideWindow);
    }
    let (hx, hy) = (mask.origin[0].abs(), mask.origin[1].abs());
    let partial = tris
        .iter()
        .flatten()
        .any(|p| p[0].abs() > hx || p[1].abs() > hy);

    let noise = Normal::new(0.0, sensor.depth_noise_sigma.as_f64())
        .map_err(|e| Error::invalid(e.to_string()))?;
    let drop = sensor.dropout_fraction.as_f64();
    let mut points = Vec::new();
    for (ix, iy) in mask.set_pixels() {
        if drop > 0.0 && rng.random::<f64>() < drop {
            continue;
        }
        let c = mask.pixel_center(ix, iy);
        let dz = if sensor.depth_noise_sigma > T::zero() {
            T::lit(noise.sample(rng))
        } else {
            T::zero()
        };
        points.push([c[0], c[1], sensor.depth_mm + dz]);
    }
    Ok(RenderedImprint {
        mask,
        cloud: PointCloud::new(points),
        partial,
    })
}
