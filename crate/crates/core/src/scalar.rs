//! Scalar abstraction for distances and scales.
//!
//! All metric-side arithmetic is generic over a floating scalar so the same
//! code runs on `f32` and `f64`. Homology arithmetic is exact integer and
//! lives in [`crate::snf`], independent of this trait.

use std::fmt::{Debug, Display};

/// Floating scalar used for distances, scales, and tolerances.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + num_traits::NumCast + Debug + Display + 'static
{
    /// Relative tolerance used when validating triangle inequalities and
    /// 1-Lipschitz bonds against accumulated floating-point error.
    fn validation_tolerance() -> Self {
        Self::from_f64(1e-9).unwrap()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_is_tiny_and_positive() {
        assert!(f64::validation_tolerance() > 0.0);
        assert!(f64::validation_tolerance() < 1e-6);
        assert!(f32::validation_tolerance() > 0.0);
    }
}
