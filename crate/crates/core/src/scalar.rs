//! Scalar abstraction for the numeric kernel.
//!
//! Symbolic trees keep exact rational constants; everything numeric
//! (evaluation, sampling, flow integration) is generic over [`Real`] so the
//! kernel runs at f32 or f64. The crate-root alias [`crate::Scalar`] pins
//! f64 for the verification layers, whose tolerances assume double
//! precision.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("f64 conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}
