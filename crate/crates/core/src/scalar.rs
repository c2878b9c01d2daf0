use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used by embedding tables, gradients and the evaluation models.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static {
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Logistic function, evaluated so that neither branch overflows.
    fn sigmoid(self) -> Self {
        if self >= Self::zero() {
            Self::one() / (Self::one() + (-self).exp())
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }

    /// `ln σ(x)` without forming σ(x) first.
    fn ln_sigmoid(self) -> Self {
        if self >= Self::zero() {
            -(-self).exp().ln_1p()
        } else {
            self - self.exp().ln_1p()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
