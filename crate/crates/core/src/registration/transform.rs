use serde::{Deserialize, Serialize};

use crate::scalar::{Point2, Scalar};

/// Planar rigid motion `p -> R(theta_z) p + (tx, ty)`, angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidTransform2D<T> {
    pub tx: T,
    pub ty: T,
    pub theta_z: T,
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn normalize_degrees<T: Scalar>(deg: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut a = deg % full;
    if a <= -half {
        a += full;
    } else if a > half {
        a -= full;
    }
    a
}

impl<T: Scalar> RigidTransform2D<T> {
    pub fn new(tx: T, ty: T, theta_z: T) -> Self {
        Self {
            tx,
            ty,
            theta_z: normalize_degrees(theta_z),
        }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn translation(tx: T, ty: T) -> Self {
        Self::new(tx, ty, T::zero())
    }

    pub(crate) fn from_radians(tx: T, ty: T, theta: T) -> Self {
        Self::new(tx, ty, theta.to_degrees())
    }

    pub fn radians(&self) -> T {
        self.theta_z.to_radians()
    }

    pub fn apply(&self, p: Point2<T>) -> Point2<T> {
        let (s, c) = self.radians().sin_cos();
        [c * p[0] - s * p[1] + self.tx, s * p[0] + c * p[1] + self.ty]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let t = self.apply([other.tx, other.ty]);
        Self::new(t[0], t[1], self.theta_z + other.theta_z)
    }

    pub fn inverse(&self) -> Self {
        let (s, c) = self.radians().sin_cos();
        Self::new(
            -(c * self.tx + s * self.ty),
            s * self.tx - c * self.ty,
            -self.theta_z,
        )
    }

    /// Largest deviation from `other` as (translation mm, angle degrees).
    pub fn distance_to(&self, other: &Self) -> (T, T) {
        let dt = (self.tx - other.tx).hypot(self.ty - other.ty);
        let da = normalize_degrees(self.theta_z - other.theta_z).abs();
        (dt, da)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_range() {
        assert_eq!(normalize_degrees(180.0f64), 180.0);
        assert_eq!(normalize_degrees(-180.0f64), 180.0);
        assert_eq!(normalize_degrees(190.0f64), -170.0);
        assert_eq!(normalize_degrees(-725.0f64), -5.0);
    }

    #[test]
    fn single_precision_inverse() {
        let t = RigidTransform2D::new(1.5f32, -0.7, 2.0);
        let id = t.compose(&t.inverse());
        assert!(id.tx.abs() < 1e-5 && id.ty.abs() < 1e-5 && id.theta_z.abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn group_laws(
            a in (-10.0f64..10.0, -10.0f64..10.0, -179.0f64..179.0),
            b in (-10.0f64..10.0, -10.0f64..10.0, -179.0f64..179.0),
            c in (-10.0f64..10.0, -10.0f64..10.0, -179.0f64..179.0),
            p in (-5.0f64..5.0, -5.0f64..5.0),
        ) {
            let a = RigidTransform2D::new(a.0, a.1, a.2);
            let b = RigidTransform2D::new(b.0, b.1, b.2);
            let c = RigidTransform2D::new(c.0, c.1, c.2);
            let id = RigidTransform2D::identity();
            let (dt, da) = a.compose(&a.inverse()).distance_to(&id);
            prop_assert!(dt < 1e-9 && da < 1e-9);
            let (dt, da) = a.inverse().compose(&a).distance_to(&id);
            prop_assert!(dt < 1e-9 && da < 1e-9);
            let (dt, da) = a.compose(&b).compose(&c).distance_to(&a.compose(&b.compose(&c)));
            prop_assert!(dt < 1e-9 && da < 1e-9);
            let q = a.compose(&b).apply([p.0, p.1]);
            let r = a.apply(b.apply([p.0, p.1]));
            prop_assert!((q[0] - r[0]).abs() < 1e-9 && (q[1] - r[1]).abs() < 1e-9);
            prop_assert!(a.theta_z > -180.0 && a.theta_z <= 180.0);
        }
    }
}
