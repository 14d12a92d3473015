//! Scalar abstraction used throughout the crate.
//!
//! All statistics are generic over a floating point type so that callers can
//! trade precision for speed (`f32`) or keep the comfortable default (`f64`).
//! The trait is a thin alias over the `num-traits` hierarchy plus the handful
//! of conversions the calibration code needs.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the statistical machinery is generic over.
///
/// Implemented for `f32` and `f64` via the blanket impl below; any type that
/// satisfies the bounds works.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + core::fmt::Debug + core::fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants and configuration
    /// values that are naturally written as `f64` literals.
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(|| {
            if value.is_nan() {
                Self::nan()
            } else if value > 0.0 {
                Self::infinity()
            } else {
                Self::neg_infinity()
            }
        })
    }

    /// Conversion to `f64` for reporting; saturates at the `f64` range.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + core::fmt::Debug
        + core::fmt::Display
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossy_roundtrip_f64() {
        let x = f64::from_f64_lossy(0.125);
        assert_eq!(x, 0.125);
        assert_eq!(x.to_f64_lossy(), 0.125);
    }

    #[test]
    fn lossy_f32_saturates() {
        let huge = f32::from_f64_lossy(1e300);
        assert!(huge.is_infinite() && huge > 0.0);
        let tiny = f32::from_f64_lossy(-1e300);
        assert!(tiny.is_infinite() && tiny < 0.0);
        assert!(f32::from_f64_lossy(f64::NAN).is_nan());
    }

    #[test]
    fn generic_works_for_both_widths() {
        fn midpoint<T: Real>(a: T, b: T) -> T {
            (a + b) / T::from_f64_lossy(2.0)
        }
        assert_eq!(midpoint(1.0f64, 3.0f64), 2.0);
        assert_eq!(midpoint(1.0f32, 3.0f32), 2.0);
    }
}
