//! Scalar abstraction shared by every module.
//!
//! Game-theoretic code (payoffs, deterministic strategies, hulls, support
//! enumeration) only needs a field with an order, so it runs on exact
//! rationals as well as on floats. Anything that takes square roots or
//! trigonometric functions (quantum states, the SDP solver) requires
//! [`Real`].

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar used for the classical results.
pub type Rational = Ratio<i64>;

/// Ordered field element: `f32`, `f64` or [`Rational`].
pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Tolerance to use when a computation nominally asks for `nominal`.
    ///
    /// `f64` honours the nominal value, `f32` widens it to what single
    /// precision can resolve, and exact rationals compare exactly.
    fn tolerance(nominal: f64) -> Self;

    fn abs_val(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    fn max_val(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_val(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `num / den` computed in the scalar type.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer fits scalar") / Self::from_i64(den).expect("integer fits scalar")
    }

    /// Lossy conversion used for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn tolerance(nominal: f64) -> Self {
        nominal
    }
}

impl Scalar for f32 {
    fn tolerance(nominal: f64) -> Self {
        nominal.max(64.0 * f32::EPSILON as f64) as f32
    }
}

impl Scalar for Rational {
    fn tolerance(_nominal: f64) -> Self {
        Ratio::from_integer(0)
    }
}

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Scalar + Float {
    fn pi() -> Self {
        Self::from_f64(std::f64::consts::PI).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}
