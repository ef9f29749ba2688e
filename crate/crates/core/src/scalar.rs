//! Scalar abstractions shared by every module.
//!
//! Polynomial algebra only needs a commutative ring ([`Coefficient`]), so it
//! works over exact rationals as well as floats. Everything that evaluates,
//! solves or integrates needs a real floating-point field ([`Scalar`]).

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Zero};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Ring of polynomial coefficients.
pub trait Coefficient:
    Clone + PartialEq + Debug + Num + Neg<Output = Self> + Send + Sync + 'static
{
    /// Whether a coefficient produced by arithmetic should be dropped.
    fn is_negligible(&self) -> bool;

    /// Embeds an exponent (used by differentiation).
    fn from_exponent(e: u32) -> Self;
}

/// Absolute pruning threshold for floating-point coefficients.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

impl Coefficient for f64 {
    fn is_negligible(&self) -> bool {
        self.abs() < PRUNE_THRESHOLD
    }

    fn from_exponent(e: u32) -> Self {
        e as f64
    }
}

impl Coefficient for f32 {
    fn is_negligible(&self) -> bool {
        (self.abs() as f64) < PRUNE_THRESHOLD
    }

    fn from_exponent(e: u32) -> Self {
        e as f32
    }
}

impl Coefficient for Ratio<i64> {
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn from_exponent(e: u32) -> Self {
        Ratio::from_integer(e as i64)
    }
}

/// Real floating-point scalar used by evaluation, the filter and the simulator.
pub trait Scalar:
    Coefficient
    + Float
    + FromPrimitive
    + Display
    + Default
    + Sum
    + Serialize
    + DeserializeOwned
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

/// Euclidean dot product.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm.
#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Neumaier-compensated sum.
pub fn compensated_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}
