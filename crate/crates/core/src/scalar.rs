//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the planners and models: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal fits the scalar type")
    }

    #[inline]
    fn from_index(index: usize) -> Self {
        Self::from_usize(index).expect("index fits the scalar type")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }

    /// Clamps `self` into `[lo, hi]`.
    #[inline]
    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        if self < lo {
            lo
        } else if self > hi {
            hi
        } else {
            self
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `n` equidistant values covering `[lo, hi]` inclusive.
///
/// Values are formed as `mid + half_width * r_i` with `r_i` symmetric
/// around zero, so a grid over `[-a, a]` is exactly sign-symmetric.
pub fn linspace<F: Scalar>(lo: F, hi: F, n: usize) -> Vec<F> {
    match n {
        0 => Vec::new(),
        1 => vec![(lo + hi) * F::half()],
        _ => {
            let mid = (lo + hi) * F::half();
            let half_width = (hi - lo) * F::half();
            let denom = F::from_index(n - 1);
            (0..n)
                .map(|i| {
                    let numer = F::from_index(2 * i) - denom;
                    if numer == F::zero() {
                        mid
                    } else {
                        mid + half_width * (numer / denom)
                    }
                })
                .collect()
        }
    }
}
