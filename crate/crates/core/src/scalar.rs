//! Scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], which is implemented for `f32`
//! and `f64`. Thresholds that depend on machine precision are looked up
//! through the trait so the same code path stays meaningful in single
//! precision.

use std::fmt::{Debug, Display};

use nalgebra::RealField;

/// Real scalar type the simulator can be instantiated with.
pub trait Real: RealField + Copy + Default + Debug + Display + Send + Sync + 'static {
    /// Relative tolerance used for structural checks (hermiticity, degeneracy).
    fn structural_tol() -> Self;

    /// Largest condition estimate accepted before the Gram solve regularizes.
    fn condition_limit() -> Self;

    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self;

    /// Lossy conversion to `f64`.
    fn as_f64(self) -> f64;
}

impl Real for f64 {
    fn structural_tol() -> Self {
        1e-10
    }

    fn condition_limit() -> Self {
        1e12
    }

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn structural_tol() -> Self {
        1e-4
    }

    fn condition_limit() -> Self {
        1e6
    }

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}
