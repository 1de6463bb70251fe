//! Floating-point abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the photon-statistics code is generic over.
///
/// Tolerances are part of the trait because the useful precision of a
/// normalization or root-search check depends on the width of the type.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Tolerance on the sum of a probability vector.
    fn norm_tol() -> Self;

    /// Target accuracy of the bisection searches on g² and ζ.
    fn root_tol() -> Self;

    /// Converts an `f64` literal; all literals used in this crate are representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn norm_tol() -> Self {
        1e-9
    }

    fn root_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn norm_tol() -> Self {
        1e-5
    }

    fn root_tol() -> Self {
        1e-5
    }
}
