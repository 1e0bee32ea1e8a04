//! Scalar abstraction used by the numeric code paths.
//!
//! Histograms, similarity scores and the GAN trainer are all written against
//! [`Real`] so the same code runs in `f64` (the default everywhere) or `f32`
//! (useful when memory or throughput matters more than precision). Constants
//! inside the algorithms are written as `f64` literals and converted with
//! [`Real::from_f64`] at use sites.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, NumCast};

/// Floating-point scalar the library is generic over.
///
/// Implemented for `f32` and `f64`. The supertraits are exactly what the
/// numeric kernels need: IEEE float semantics from [`Float`], in-place
/// arithmetic for accumulators, summation over iterators, and the usual
/// thread-safety bounds so features can be computed in parallel.
pub trait Real:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    ///
    /// Conversions the library performs are always in range for `f32`
    /// (tolerances, small integer counts, pixel values), so a lossy narrowing
    /// is acceptable and infallible here.
    fn from_f64(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("finite f64 constant converts to scalar type")
    }

    /// Widens this scalar to `f64`, e.g. for logging or serialization.
    /// (Named to steer clear of `ToPrimitive::to_f64`.)
    fn as_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("scalar widens to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_of_squares<T: Real>(values: &[T]) -> T {
        values.iter().map(|v| *v * *v).sum()
    }

    #[test]
    fn generic_kernel_runs_in_both_widths() {
        let xs64: Vec<f64> = vec![1.0, 2.0, 3.0];
        let xs32: Vec<f32> = vec![1.0, 2.0, 3.0];
        assert_eq!(sum_of_squares(&xs64), 14.0);
        assert_eq!(sum_of_squares(&xs32), 14.0);
    }

    #[test]
    fn f64_round_trip_is_exact() {
        let v = 0.123_456_789_012_345_67_f64;
        assert_eq!(<f64 as Real>::from_f64(v), v);
        assert_eq!(Real::as_f64(v), v);
    }

    #[test]
    fn f32_narrowing_rounds() {
        let narrowed = <f32 as Real>::from_f64(0.1);
        assert_eq!(narrowed, 0.1_f32);
    }
}
