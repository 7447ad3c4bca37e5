//! Scalar abstraction: every analytic and sampling routine is generic over
//! [`Real`], implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};

use num_traits::Float;

/// Floating-point scalar used throughout the crate.
pub trait Real: Float + Debug + Display + Send + Sync + 'static {
    /// Lossy conversion from `f64`; exact for `f64` itself.
    fn from_f64(x: f64) -> Self;

    /// Widening conversion to `f64`; exact for both `f32` and `f64`.
    ///
    /// Named to avoid colliding with `num_traits::ToPrimitive::to_f64`.
    fn into_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn into_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn into_f64(self) -> f64 {
        self
    }
}

/// Shorthand for `Real::from_f64` in formula-heavy code.
#[inline]
pub(crate) fn real<F: Real>(x: f64) -> F {
    F::from_f64(x)
}
