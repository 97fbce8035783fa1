//! Scalar abstraction shared by the numerical core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point scalar used throughout estimation.
///
/// Implemented for `f32` and `f64`. Everything that touches distribution
/// functions (p-values, quantiles) goes through `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::nan();
    }
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

pub(crate) fn weighted_mean<T: Real>(xs: &[T], w: &[T]) -> T {
    let (num, den) = xs
        .iter()
        .zip(w)
        .fold((T::zero(), T::zero()), |(n, d), (&x, &wi)| {
            (n + wi * x, d + wi)
        });
    num / den
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
