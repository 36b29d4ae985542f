//! Scalar abstractions.
//!
//! The Krylov machinery only needs a field with conjugation and a real
//! companion type, so everything in [`crate::tridiag`], [`crate::orthopoly`]
//! and [`crate::solvers`] is written against [`Scalar`] / [`Real`] and works
//! for `f32`, `f64`, `Complex<f32>` and `Complex<f64>`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field element used for vectors and matrices: real or complex.
pub trait Scalar: Copy + NumAssign + std::ops::Neg<Output = Self> + Debug + Default + Send + Sync + 'static {
    type Real: Real;

    /// Dyson index of the field: 1 for real, 2 for complex.
    const BETA: u8;

    fn conj(self) -> Self;
    /// Squared modulus.
    fn abs_sq(self) -> Self::Real;
    fn re(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    /// Builds `re + i·im`; real fields drop `im`.
    fn from_parts(re: Self::Real, im: Self::Real) -> Self;
    fn scale(self, r: Self::Real) -> Self;

    #[inline]
    fn abs(self) -> Self::Real {
        self.abs_sq().sqrt()
    }
}

macro_rules! impl_real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            const BETA: u8 = 1;
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn abs_sq(self) -> Self {
                self * self
            }
            #[inline]
            fn re(self) -> Self {
                self
            }
            #[inline]
            fn from_real(r: Self) -> Self {
                r
            }
            #[inline]
            fn from_parts(re: Self, _im: Self) -> Self {
                re
            }
            #[inline]
            fn scale(self, r: Self) -> Self {
                self * r
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
        }
    };
}

impl_real_scalar!(f32);
impl_real_scalar!(f64);

impl<T: Real> Scalar for Complex<T> {
    type Real = T;
    const BETA: u8 = 2;
    #[inline]
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    #[inline]
    fn abs_sq(self) -> T {
        self.norm_sqr()
    }
    #[inline]
    fn re(self) -> T {
        self.re
    }
    #[inline]
    fn from_real(r: T) -> Self {
        Complex::new(r, T::zero())
    }
    #[inline]
    fn from_parts(re: T, im: T) -> Self {
        Complex::new(re, im)
    }
    #[inline]
    fn scale(self, r: T) -> Self {
        Complex::new(self.re * r, self.im * r)
    }
}
