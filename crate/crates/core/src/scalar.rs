//! Real scalar abstraction the simulator is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable as the real part of an amplitude.
///
/// `TOLERANCE` is the threshold used for every norm, unitarity and
/// probability check carried out at this precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    const TOLERANCE: Self;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }
}

impl Scalar for f64 {
    const TOLERANCE: f64 = 1e-12;
}

impl Scalar for f32 {
    const TOLERANCE: f32 = 2e-5;
}

/// Complex amplitude over a [`Scalar`].
pub type Amp<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Scalar>(re: T, im: T) -> Amp<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn re<T: Scalar>(re: T) -> Amp<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub(crate) fn zero<T: Scalar>() -> Amp<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn one<T: Scalar>() -> Amp<T> {
    Complex::new(T::one(), T::zero())
}
