use serde::{Deserialize, Serialize};

use super::transform::RigidTransform2D;
use crate::error::{Error, Result};
use crate::meshcloud::PointCloud;
use crate::scalar::{Point2, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Gaussian-mixture EM with annealed bandwidth.
    Em,
    /// Point-to-point nearest-neighbour ICP baseline.
    Icp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistrationParams<T> {
    pub max_iterations: usize,
    /// Stop once the extrapolated remaining mean displacement of source points falls below this (mm).
    pub convergence_tol: T,
    /// Initial correspondence bandwidth (mm).
    pub sigma0: T,
    /// Bandwidth multiplier per iteration.
    pub sigma_decay: T,
    /// Bandwidth floor (mm).
    pub sigma_min: T,
    /// Weight of the uniform outlier component, in `[0, 1)`.
    pub outlier_weight: T,
    pub method: Method,
    /// Solve translation only, holding the rotation at this angle (degrees).
    pub fixed_theta: Option<T>,
}

impl<T: Scalar> Default for RegistrationParams<T> {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_tol: T::lit(1e-3),
            sigma0: T::lit(1.0),
            sigma_decay: T::lit(0.7),
            sigma_min: T::lit(0.1),
            outlier_weight: T::lit(0.1),
            method: Method::Em,
            fixed_theta: None,
        }
    }
}

impl<T: Scalar> RegistrationParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = self.convergence_tol > T::zero()
            && self.sigma0 > T::zero()
            && self.sigma_min > T::zero()
            && self.sigma_decay > T::zero()
            && self.sigma_decay <= T::one();
        if self.max_iterations == 0 || !positive {
            return Err(Error::invalid("registration parameters must be positive"));
        }
        if !(self.outlier_weight >= T::zero() && self.outlier_weight < T::one()) {
            return Err(Error::invalid("outlier weight must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementResult<T> {
    /// Source-to-target transform, including the initial alignment.
    pub transform: RigidTransform2D<T>,
    pub y_ref: T,
    pub theta_z: T,
    /// RMS distance from each transformed source point to its nearest target point (mm).
    pub residual_rmse: T,
    pub converged: bool,
    pub iterations: usize,
    /// Correspondence-weighted residual (mm) after each iteration.
    pub trace: Vec<T>,
}

pub const MIN_POINTS: usize = 10;

fn planar<T: Scalar>(cloud: &PointCloud<T>) -> Vec<Point2<T>> {
    cloud.valid_points().map(|p| [p[0], p[1]]).collect()
}

fn sq_dist<T: Scalar>(a: Point2<T>, b: Point2<T>) -> T {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

fn nearest_sq<T: Scalar>(p: Point2<T>, cloud: &[Point2<T>]) -> (usize, T) {
    cloud
        .iter()
        .enumerate()
        .map(|(i, &q)| (i, sq_dist(p, q)))
        .fold(
            (0, T::infinity()),
            |best, c| if c.1 < best.1 { c } else { best },
        )
}

/// RMS nearest-neighbour distance from `moved` to `target`.
pub fn nearest_rmse<T: Scalar>(moved: &[Point2<T>], target: &[Point2<T>]) -> T {
    let sum: T = moved.iter().map(|&p| nearest_sq(p, target).1).sum();
    (sum / T::from_usize_lossy(moved.len().max(1))).sqrt()
}

/// Sparse correspondence weights `(source, target, weight)`.
type Weights<T> = Vec<(usize, usize, T)>;

/// Weighted planar Procrustes: the rigid motion minimising
/// `sum w |t_n - T s_m|^2`, with rotation from the 2x2 cross-covariance.
fn weighted_procrustes<T: Scalar>(
    src: &[Point2<T>],
    tgt: &[Point2<T>],
    weights: &Weights<T>,
    fixed_theta: Option<T>,
) -> Result<RigidTransform2D<T>> {
    let total: T = weights.iter().map(|w| w.2).sum();
    if !(total > T::lit(1e-12)) {
        return Err(Error::Degenerate(
            "no correspondences within the bandwidth".into(),
        ));
    }
    let mut ms = [T::zero(); 2];
    let mut mt = [T::zero(); 2];
    for &(m, n, w) in weights {
        for k in 0..2 {
            ms[k] += w * src[m][k];
            mt[k] += w * tgt[n][k];
        }
    }
    ms = ms.map(|v| v / total);
    mt = mt.map(|v| v / total);

    // Cross-covariance H = sum w a b^T with a, b centred source/target points.
    let mut h = [[T::zero(); 2]; 2];
    let mut spread = T::zero();
    for &(m, n, w) in weights {
        let a = [src[m][0] - ms[0], src[m][1] - ms[1]];
        let b = [tgt[n][0] - mt[0], tgt[n][1] - mt[1]];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] += w * a[i] * b[j];
            }
        }
        spread += w * (a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1]);
    }
    let theta = match fixed_theta {
        Some(deg) => deg.to_radians(),
        None => {
            // For 2x2 H the SVD rotation V U^T reduces to this angle.
            let dot = h[0][0] + h[1][1];
            let cross = h[0][1] - h[1][0];
            if dot.hypot(cross) <= T::lit(1e-12) * spread {
                return Err(Error::Degenerate(
                    "rank-deficient cross-covariance; rotation undetermined".into(),
                ));
            }
            cross.atan2(dot)
        }
    };
    let (s, c) = theta.sin_cos();
    let tx = mt[0] - (c * ms[0] - s * ms[1]);
    let ty = mt[1] - (s * ms[0] + c * ms[1]);
    Ok(RigidTransform2D::from_radians(tx, ty, theta))
}

/// Symmetric mixture weights: the average of the posterior of each target
/// point over source components and of each source point over target
/// components, each with a uniform outlier term.
fn em_weights<T: Scalar>(
    moved: &[Point2<T>],
    tgt: &[Point2<T>],
    sigma: T,
    outlier_weight: T,
) -> Weights<T> {
    let (m_len, n_len) = (moved.len(), tgt.len());
    let two_s2 = T::lit(2.0) * sigma * sigma;
    let cutoff = T::lit(36.0) * sigma * sigma;
    let ratio = outlier_weight / (T::one() - outlier_weight);
    let area = T::PI() * two_s2;
    let (mf, nf) = (T::from_usize_lossy(m_len), T::from_usize_lossy(n_len));
    let c_col = area * ratio * mf / nf;
    let c_row = area * ratio * nf / mf;

    let mut kernel: Weights<T> = Vec::new();
    let mut row = vec![c_row; m_len];
    let mut col = vec![c_col; n_len];
    for (m, &p) in moved.iter().enumerate() {
        for (n, &q) in tgt.iter().enumerate() {
            let d2 = sq_dist(p, q);
            if d2 < cutoff {
                let k = (-d2 / two_s2).exp();
                row[m] += k;
                col[n] += k;
                kernel.push((m, n, k));
            }
        }
    }
    let half = T::lit(0.5);
    for w in &mut kernel {
        w.2 = half * w.2 * (T::one() / row[w.0] + T::one() / col[w.1]);
    }
    kernel
}

fn weighted_residual<T: Scalar>(moved: &[Point2<T>], tgt: &[Point2<T>], weights: &Weights<T>) -> T {
    let total: T = weights.iter().map(|w| w.2).sum();
    let sum: T = weights
        .iter()
        .map(|&(m, n, w)| w * sq_dist(moved[m], tgt[n]))
        .sum();
    (sum / total).sqrt()
}

/// Rigidly registers `source` onto `target` in the xy plane, starting from `init`.
///
/// z coordinates are ignored. Once the bandwidth reaches its floor the loop
/// stops when the mean displacement still to come, extrapolated from the
/// ratio of successive per-iteration displacements, drops below
/// `convergence_tol`. It also stops when the weighted residual would increase,
/// or after `max_iterations`.
pub fn register<T: Scalar>(
    source: &PointCloud<T>,
    target: &PointCloud<T>,
    init: RigidTransform2D<T>,
    params: &RegistrationParams<T>,
) -> Result<RefinementResult<T>> {
    params.validate()?;
    let src = planar(source);
    let tgt = planar(target);
    if src.len() < MIN_POINTS || tgt.len() < MIN_POINTS {
        return Err(Error::invalid(format!(
            "registration needs at least {MIN_POINTS} points per cloud (got {} and {})",
            src.len(),
            tgt.len()
        )));
    }

    let mut init = init;
    if let Some(theta) = params.fixed_theta {
        init.theta_z = crate::registration::normalize_degrees(theta);
    }
    let mut current = init;
    let mut moved: Vec<Point2<T>> = src.iter().map(|&p| current.apply(p)).collect();
    let mut trace: Vec<T> = Vec::new();
    let mut sigma = params.sigma0;
    let mut converged = false;
    let mut iterations = 0;
    let mut prev_shift: Option<T> = None;

    while iterations < params.max_iterations {
        let weights = match params.method {
            Method::Em => em_weights(&moved, &tgt, sigma, params.outlier_weight),
            Method::Icp => moved
                .iter()
                .enumerate()
                .map(|(m, &p)| (m, nearest_sq(p, &tgt).0, T::one()))
                .collect(),
        };
        let step = weighted_procrustes(&src, &tgt, &weights, params.fixed_theta)?;
        let next: Vec<Point2<T>> = src.iter().map(|&p| step.apply(p)).collect();
        let residual = weighted_residual(&next, &tgt, &weights);

        if let Some(&last) = trace.last() {
            if residual > last {
                converged = sigma <= params.sigma_min || params.method == Method::Icp;
                break;
            }
        }
        iterations += 1;
        let shift = moved
            .iter()
            .zip(&next)
            .map(|(&a, &b)| sq_dist(a, b).sqrt())
            .sum::<T>()
            / T::from_usize_lossy(src.len());
        trace.push(residual);
        current = step;
        moved = next;

        let at_floor = sigma <= params.sigma_min || params.method == Method::Icp;
        if at_floor {
            // Remaining motion of a geometric sequence with the observed ratio.
            // Needs two displacements at the final bandwidth for a ratio.
            let remaining = prev_shift.map(|prev| {
                let rate = if prev > T::zero() {
                    (shift / prev).min(T::lit(0.99))
                } else {
                    T::zero()
                };
                shift / (T::one() - rate)
            });
            if remaining.is_some_and(|r| r < params.convergence_tol) || shift == T::zero() {
                converged = true;
                break;
            }
            prev_shift = Some(shift);
        }
        sigma = (sigma * params.sigma_decay).max(params.sigma_min);
    }

    Ok(RefinementResult {
        transform: current,
        y_ref: current.ty,
        theta_z: current.theta_z,
        residual_rmse: nearest_rmse(&moved, &tgt),
        converged,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob() -> PointCloud<f64> {
        // An asymmetric L-shaped patch on a 0.2 mm lattice.
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..8 {
                pts.push([i as f64 * 0.2 - 2.0, j as f64 * 0.2 - 1.0, 1.0]);
            }
        }
        for i in 0..6 {
            for j in 8..20 {
                pts.push([i as f64 * 0.2 - 2.0, j as f64 * 0.2 - 1.0, 1.0]);
            }
        }
        PointCloud::new(pts)
    }

    fn moved(cloud: &PointCloud<f64>, t: &RigidTransform2D<f64>) -> PointCloud<f64> {
        PointCloud::new(
            cloud
                .points
                .iter()
                .map(|p| {
                    let q = t.apply([p[0], p[1]]);
                    [q[0], q[1], p[2]]
                })
                .collect(),
        )
    }

    #[test]
    fn self_registration_is_identity() {
        let s = blob();
        let r = register(&s, &s, RigidTransform2D::identity(), &Default::default()).unwrap();
        assert!(r.residual_rmse < 1e-6, "rmse {}", r.residual_rmse);
        let (dt, da) = r.transform.distance_to(&RigidTransform2D::identity());
        assert!(dt < 1e-6 && da < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn too_few_points() {
        let s = PointCloud::new(vec![[0.0, 0.0, 0.0]; 5]);
        assert!(register(
            &s,
            &blob(),
            RigidTransform2D::identity(),
            &Default::default()
        )
        .is_err());
    }

    #[test]
    fn coincident_planar_points_are_degenerate() {
        let line = PointCloud::new((0..20).map(|i| [0.0, 0.0, i as f64]).collect());
        let err = register(
            &line,
            &line,
            RigidTransform2D::identity(),
            &Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err}");
    }

    #[test]
    fn icp_baseline_recovers_small_shift() {
        let s = blob();
        let truth = RigidTransform2D::new(0.05, -0.04, 0.5);
        let t = moved(&s, &truth);
        let params = RegistrationParams {
            method: Method::Icp,
            ..Default::default()
        };
        let r = register(&s, &t, RigidTransform2D::identity(), &params).unwrap();
        let (dt, da) = r.transform.distance_to(&truth);
        assert!(dt < 1e-6 && da < 1e-6, "{dt} {da}");
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fixed_rotation_solves_translation_only() {
        let s = blob();
        let truth = RigidTransform2D::new(0.4, 0.3, 2.0);
        let t = moved(&s, &truth);
        let params = RegistrationParams {
            fixed_theta: Some(2.0),
            ..Default::default()
        };
        let r = register(&s, &t, RigidTransform2D::identity(), &params).unwrap();
        assert_eq!(r.theta_z, 2.0);
        assert!((r.transform.tx - 0.4).abs() < 0.01 && (r.transform.ty - 0.3).abs() < 0.01);
    }

    #[test]
    fn param_validation() {
        let p = RegistrationParams::<f64> {
            outlier_weight: 1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = RegistrationParams::<f64> {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
