use serde::{Deserialize, Serialize};

use super::mask::Mask;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Log-transformed Hu invariants `H_m = -sign(h_m) * log10|h_m|`.
///
/// An invariant that is exactly zero maps to the sentinel `0.0`, which the
/// distance treats as a vanishing term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuSignature<T> {
    pub h: [T; 7],
}

/// Below this magnitude a signature component is excluded from the
/// normalised distance.
pub const HU_TERM_EPS: f64 = 1e-8;

/// The seven raw Hu invariants of a binary mask, from pixel-centre moments.
pub fn hu_moments<T: Scalar>(mask: &Mask<T>) -> Result<[T; 7]> {
    let pts: Vec<(T, T)> = mask
        .set_pixels()
        .map(|(x, y)| (T::from_usize_lossy(x), T::from_usize_lossy(y)))
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyMask);
    }
    let m00 = T::from_usize_lossy(pts.len());
    let cx = pts.iter().map(|p| p.0).sum::<T>() / m00;
    let cy = pts.iter().map(|p| p.1).sum::<T>() / m00;

    let mut mu = [[T::zero(); 4]; 4];
    for &(x, y) in &pts {
        let (dx, dy) = (x - cx, y - cy);
        let xs = [T::one(), dx, dx * dx, dx * dx * dx];
        let ys = [T::one(), dy, dy * dy, dy * dy * dy];
        for p in 0..4 {
            for q in 0..(4 - p) {
                if p + q >= 2 {
                    mu[p][q] += xs[p] * ys[q];
                }
            }
        }
    }
    let eta = |p: usize, q: usize| {
        let order = T::from_usize_lossy(p + q);
        mu[p][q] / m00.powf(T::one() + order / T::lit(2.0))
    };
    let (n20, n02, n11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (n30, n03, n21, n12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));
    let c = |x: f64| T::lit(x);

    let a = n30 + n12;
    let b = n21 + n03;
    let p = n30 - c(3.0) * n12;
    let q = c(3.0) * n21 - n03;
    Ok([
        n20 + n02,
        (n20 - n02).powi(2) + c(4.0) * n11 * n11,
        p * p + q * q,
        a * a + b * b,
        p * a * (a * a - c(3.0) * b * b) + q * b * (c(3.0) * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + c(4.0) * n11 * a * b,
        q * a * (a * a - c(3.0) * b * b) - p * b * (c(3.0) * a * a - b * b),
    ])
}

pub fn log_transform<T: Scalar>(h: T) -> T {
    if h == T::zero() {
        T::zero()
    } else {
        -h.signum() * h.abs().log10()
    }
}

pub fn hu_signature<T: Scalar>(mask: &Mask<T>) -> Result<HuSignature<T>> {
    Ok(HuSignature {
        h: hu_moments(mask)?.map(log_transform),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuDistance<T> {
    pub value: T,
    /// Terms dropped because the normalising component was below [`HU_TERM_EPS`].
    pub skipped_terms: usize,
    /// More than two terms were dropped, so plain absolute differences were summed.
    pub absolute_fallback: bool,
}

/// `sum_m |a_m - b_m| / |a_m|`, normalised by the first argument.
pub fn hu_distance<T: Scalar>(a: &HuSignature<T>, b: &HuSignature<T>) -> T {
    hu_distance_detailed(a, b).value
}

pub fn hu_distance_detailed<T: Scalar>(a: &HuSignature<T>, b: &HuSignature<T>) -> HuDistance<T> {
    let eps = T::lit(HU_TERM_EPS);
    let mut value = T::zero();
    let mut skipped_terms = 0;
    for (&x, &y) in a.h.iter().zip(&b.h) {
        if x.abs() < eps {
            skipped_terms += 1;
        } else {
            value += (x - y).abs() / x.abs();
        }
    }
    let absolute_fallback = skipped_terms > 2;
    if absolute_fallback {
        value = a.h.iter().zip(&b.h).map(|(&x, &y)| (x - y).abs()).sum();
    }
    HuDistance {
        value,
        skipped_terms,
        absolute_fallback,
    }
}

/// `min(d(a, b), d(b, a))`, the order-independent form used for admission.
pub fn symmetric_hu_distance<T: Scalar>(a: &HuSignature<T>, b: &HuSignature<T>) -> T {
    hu_distance(a, b).min(hu_distance(b, a))
}
