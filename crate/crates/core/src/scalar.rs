//! Scalar abstraction shared by the linear algebra and geometry layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Matrix entry: either a real scalar or a complex number over one.
pub trait Entry: Copy + NumAssign + Neg<Output = Self> + Debug + Send + Sync + 'static {
    type Real: Real;

    /// Absolute value (modulus for complex entries).
    fn modulus(self) -> Self::Real;

    fn from_real(x: Self::Real) -> Self;

    fn conj(self) -> Self;
}

impl<T: Real> Entry for T {
    type Real = T;

    #[inline]
    fn modulus(self) -> T {
        self.abs()
    }

    #[inline]
    fn from_real(x: T) -> T {
        x
    }

    #[inline]
    fn conj(self) -> T {
        self
    }
}

impl<T: Real> Entry for Complex<T> {
    type Real = T;

    #[inline]
    fn modulus(self) -> T {
        self.norm()
    }

    #[inline]
    fn from_real(x: T) -> Self {
        Complex::new(x, T::zero())
    }

    #[inline]
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
}
