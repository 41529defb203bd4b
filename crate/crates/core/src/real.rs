//! Scalar abstraction for the numerical core.
//!
//! Everything under `spectra`, `geometry`, `rendering`, `costs`, `solver`
//! and `eval` is generic over [`Real`], so the same code runs in `f32` or
//! `f64`. The pipeline entry points and the file formats use the concrete
//! aliases exported from the crate root.

use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + Default + std::iter::Sum
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal must be representable")
}

/// Lossy conversion back to `f64` for reporting and serialization.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar converts to f64")
}
