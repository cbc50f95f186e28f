//! Real scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating-point real scalar: `f32` or `f64`.
///
/// All vectors and matrices in this crate hold `Complex<T>` entries with
/// `T: Real`.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal (rounded for `f32`).
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    /// Magnitudes below this threshold are treated as exact zeros.
    #[inline]
    fn zero_threshold() -> Self {
        Self::lit(1e-300).max(Self::min_positive_value())
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over [`Real`].
pub type C<T> = Complex<T>;

/// Converts a real count into the scalar type.
#[inline]
pub(crate) fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable")
}
