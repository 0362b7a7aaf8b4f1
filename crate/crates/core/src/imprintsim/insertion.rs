use serde::{Deserialize, Serialize};

use super::sensor::Perturbation;
use crate::error::{Error, Result};
use crate::scalar::{cross2, Point2, Scalar};

/// Square peg into square hole, both centred at the nominal pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertionSpec<T> {
    pub peg_side: T,
    pub hole_side: T,
}

impl<T: Scalar> InsertionSpec<T> {
    pub fn new(peg_side: T, hole_side: T) -> Result<Self> {
        if !(peg_side > T::zero()) || !(hole_side > peg_side) {
            return Err(Error::invalid("hole must be larger than a positive peg"));
        }
        Ok(Self {
            peg_side,
            hole_side,
        })
    }
}

fn square<T: Scalar>(side: T) -> [Point2<T>; 4] {
    let h = side / T::lit(2.0);
    [[-h, -h], [h, -h], [h, h], [-h, h]]
}

/// Point inside (or on) a counter-clockwise convex polygon.
fn in_convex<T: Scalar>(poly: &[Point2<T>], p: Point2<T>) -> bool {
    (0..poly.len()).all(|i| cross2(poly[i], poly[(i + 1) % poly.len()], p) >= T::zero())
}

/// True when every peg corner, displaced by the residual pose error, lies in the hole.
pub fn insertion_success<T: Scalar>(residual: &Perturbation<T>, spec: &InsertionSpec<T>) -> bool {
    debug_assert!(residual.theta_z.abs() < T::lit(45.0));
    let pose = residual.transform();
    let hole = square(spec.hole_side);
    square(spec.peg_side)
        .iter()
        .all(|&c| in_convex(&hole, pose.apply(c)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(hole: f64) -> InsertionSpec<f64> {
        InsertionSpec::new(30.2, hole).unwrap()
    }

    #[test]
    fn centred_peg_fits() {
        assert!(insertion_success(
            &Perturbation::new(0.0, 0.0, 0.0),
            &spec(31.6)
        ));
    }

    #[test]
    fn offset_beyond_half_clearance_fails() {
        assert!(!insertion_success(
            &Perturbation::new(0.0, 0.8, 0.0),
            &spec(31.6)
        ));
        assert!(insertion_success(
            &Perturbation::new(0.0, 0.69, 0.0),
            &spec(31.6)
        ));
    }

    #[test]
    fn three_degrees_fails_the_tight_hole() {
        let w = 30.2 * (3f64.to_radians().cos() + 3f64.to_radians().sin());
        assert!(w > 31.6);
        assert!(!insertion_success(
            &Perturbation::new(0.0, 0.0, 3.0),
            &spec(31.6)
        ));
    }

    #[test]
    fn generous_hole_accepts_the_whole_perturbation_box() {
        let s = spec(40.2);
        for &x in &[-2.5, 0.0, 2.5] {
            for &y in &[-2.5, 0.0, 2.5] {
                for &t in &[-3.0, 0.0, 3.0] {
                    assert!(insertion_success(&Perturbation::new(x, y, t), &s));
                }
            }
        }
    }

    #[test]
    fn hole_must_exceed_peg() {
        assert!(InsertionSpec::new(30.2, 30.0).is_err());
    }
}
