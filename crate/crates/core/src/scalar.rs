use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the numerical core is written against.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` constant.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable")
    }

    fn from_usize_exact(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

pub(crate) fn mean<T: Scalar>(a: &[T]) -> T {
    a.iter().copied().sum::<T>() / T::from_usize_exact(a.len())
}

/// `a -= coef * b`
pub(crate) fn axpy_sub<T: Scalar>(a: &mut [T], coef: T, b: &[T]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x = *x - coef * y;
    }
}
