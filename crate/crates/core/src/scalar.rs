//! Scalar abstraction shared by every numerical module.

use std::fmt;
use std::iter::Sum;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Complex amplitude over a real scalar type.
pub type Complex<T> = num_complex::Complex<T>;

/// Floating-point scalar the laboratory is generic over.
///
/// Everything numerical in this crate is written against `Real`, so the same
/// code runs in `f64` (the default, used by all tolerance-bearing checks) and
/// in `f32` for cheap exploratory runs.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Unit-roundoff of the type.
    fn epsilon() -> Self;
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

/// Values that can live at grid points: real scalars and complex amplitudes.
pub trait Amplitude<T: Real>:
    Copy
    + Send
    + Sync
    + fmt::Debug
    + PartialEq
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::Mul<T, Output = Self>
    + std::ops::AddAssign
    + 'static
{
    fn zero() -> Self;
    fn modulus_sqr(self) -> T;
    fn into_complex(self) -> Complex<T>;
}

impl<T: Real> Amplitude<T> for T {
    #[inline]
    fn zero() -> Self {
        T::zero()
    }
    #[inline]
    fn modulus_sqr(self) -> T {
        self * self
    }
    #[inline]
    fn into_complex(self) -> Complex<T> {
        Complex::new(self, T::zero())
    }
}

impl<T: Real> Amplitude<T> for Complex<T> {
    #[inline]
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    #[inline]
    fn modulus_sqr(self) -> T {
        self.re * self.re + self.im * self.im
    }
    #[inline]
    fn into_complex(self) -> Complex<T> {
        self
    }
}

/// Fixed-order sum; keeps reductions independent of any parallel split.
#[inline]
pub fn fsum<T: Real, I: IntoIterator<Item = T>>(it: I) -> T {
    it.into_iter().fold(T::zero(), |a, b| a + b)
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// `|z|` without requiring `num_traits::Float` on the real type.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}
