//! Scalar abstraction shared by every module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion to `f64` (for reporting).
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A tolerance stated for double precision, rescaled to this type's
    /// machine epsilon. For `f64` this is the identity.
    fn tol(f64_tol: f64) -> Self {
        let ratio = Self::epsilon().to_f64_lossy() / f64::EPSILON;
        Self::lit(f64_tol * ratio)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tol_is_identity_for_f64() {
        assert_eq!(f64::tol(1e-10), 1e-10);
    }

    #[test]
    fn tol_scales_for_f32() {
        let t = f32::tol(1e-10);
        let expected = 1e-10 * (f32::EPSILON as f64 / f64::EPSILON);
        assert!((t as f64 - expected).abs() / expected < 1e-6);
    }
}
