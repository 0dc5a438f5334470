//! Real scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the linear algebra, state and SVM code.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate
/// (1e-10 and tighter) only hold for `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal; lossy for narrower types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Smallest magnitude treated as non-zero when normalising or dividing.
    fn tiny() -> Self;
}

impl Real for f32 {
    fn tiny() -> Self {
        1e-30
    }
}

impl Real for f64 {
    fn tiny() -> Self {
        1e-300
    }
}

pub type C<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
