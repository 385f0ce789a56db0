//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point field the linear algebra is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances that the crate reports in
/// `f64` terms are rescaled for coarser types by [`Tolerances::for_scalar`].
///
/// [`Tolerances::for_scalar`]: crate::matrix::Tolerances::for_scalar
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
    + crate::matrix::DenseBackend
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex numbers over a [`Real`] field.
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cone<T: Real>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

/// `e^{2πi x}`, the point of the circle with coordinate `x`.
#[inline]
pub fn circle_point<T: Real>(x: T) -> Cx<T> {
    Complex::from_polar(T::one(), T::TAU() * x)
}

/// Circle coordinate in `[0, 1)` of a nonzero complex number.
#[inline]
pub fn circle_coord<T: Real>(z: Cx<T>) -> T {
    let x = z.arg() / T::TAU();
    if x < T::zero() {
        let w = x + T::one();
        // arg slightly below zero rounds up to exactly 1
        if w >= T::one() {
            T::zero()
        } else {
            w
        }
    } else {
        x
    }
}

/// Reduces `x` into `[0, 1)`.
#[inline]
pub fn wrap_unit<T: Real>(x: T) -> T {
    let w = x - x.floor();
    if w >= T::one() {
        T::zero()
    } else {
        w
    }
}
