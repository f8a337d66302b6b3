//! Scalar abstraction shared by the numerical core.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the numerical kernels are written against.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate
/// assume `f64`; `f32` instantiations are useful for smoke tests and
/// memory-bound sweeps where round-off near `1e-6` is acceptable.
pub trait Real: Float + FloatConst + FromPrimitive + ToPrimitive + rustfft::FftNum + Default + Display + Debug + Send + Sync + 'static {
    /// Converts an `f64` constant into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
