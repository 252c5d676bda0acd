//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::NdFloat;
use num_traits::{FromPrimitive, ToPrimitive};

/// A real scalar: `f32` or `f64`.
///
/// Everything in this crate that touches matrices is generic over this trait.
/// The `lit` helper converts literal constants without sprinkling
/// `F::from_f64(..).unwrap()` through the numerical code.
pub trait Scalar:
    NdFloat + FromPrimitive + ToPrimitive + Default + Sum + Debug + Display + Send + Sync + 'static
{
    /// Machine-precision dependent slack used when comparing objectives.
    const OBJECTIVE_SLACK: f64;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const OBJECTIVE_SLACK: f64 = 1e-5;
}

impl Scalar for f64 {
    const OBJECTIVE_SLACK: f64 = 1e-8;
}

/// Soft-thresholding `sign(z) * max(|z| - t, 0)`.
#[inline]
pub fn soft_threshold<F: Scalar>(z: F, t: F) -> F {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        F::zero()
    }
}

/// Projection of `z` onto `[-t, t]`.
#[inline]
pub fn clip<F: Scalar>(z: F, t: F) -> F {
    z.max(-t).min(t)
}
