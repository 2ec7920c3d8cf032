//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar the simulator is generic over (`f32` or `f64`).
///
/// Tolerances are part of the scalar because single precision cannot meet
/// double-precision structural checks.
pub trait Real:
    Float + FloatConst + FromPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Structural invariants: Hermiticity, unit trace, normalization, orthonormality.
    fn structural_tol() -> Self;
    /// Spectral invariants: eigenvalue signs, distances derived from eigensolves.
    fn spectral_tol() -> Self;
    /// Below this a postselection probability or overlap is treated as zero.
    fn null_threshold() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }
}

impl Real for f64 {
    fn structural_tol() -> Self {
        1e-12
    }
    fn spectral_tol() -> Self {
        1e-10
    }
    fn null_threshold() -> Self {
        1e-14
    }
}

impl Real for f32 {
    fn structural_tol() -> Self {
        2e-5
    }
    fn spectral_tol() -> Self {
        1e-4
    }
    fn null_threshold() -> Self {
        1e-6
    }
}

/// Complex scalar over [`Real`].
pub type Cx<T> = num_complex::Complex<T>;

pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Cx::new(re, im)
}

pub(crate) fn re<T: Real>(x: T) -> Cx<T> {
    Cx::new(x, T::zero())
}
