//! Scalar abstraction shared by every probability computation.
//!
//! All exact enumeration code is written against [`Scalar`], which only needs
//! field arithmetic and an ordering. Anything involving `exp`/`ln` (privacy
//! parameters, leakage, noise densities) additionally needs [`Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, Num, Signed, ToPrimitive, Zero};

/// Exact rational scalar used for oracle computations on tiny instances.
pub type Rational = Ratio<i128>;

pub trait Scalar:
    Num + Signed + Copy + PartialOrd + Debug + Display + Send + Sync + Sum + ToPrimitive + 'static
{
    /// Slack used when validating normalization and other invariants.
    fn tolerance() -> Self;

    /// Converts an `f64` literal; rationals use a continued-fraction approximation.
    fn of_f64(x: f64) -> Self;

    fn of_usize(n: usize) -> Self {
        Self::of_f64(n as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `max(0, self)`
    fn positive_part(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }
}

/// Floating-point scalars (f32/f64) that support transcendental functions.
pub trait Real: Scalar + Float + FloatConst {}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }
    fn of_f64(x: f64) -> Self {
        x
    }
    fn of_usize(n: usize) -> Self {
        n as f64
    }
}

impl Scalar for f32 {
    // single precision cannot hold 1e-9 near 1.0
    fn tolerance() -> Self {
        1e-5
    }
    fn of_f64(x: f64) -> Self {
        x as f32
    }
    fn of_usize(n: usize) -> Self {
        n as f32
    }
}

impl Scalar for Rational {
    fn tolerance() -> Self {
        Rational::zero()
    }
    fn of_f64(x: f64) -> Self {
        Rational::approximate_float(x).unwrap_or_else(Rational::zero)
    }
    fn of_usize(n: usize) -> Self {
        Rational::from_integer(n as i128)
    }
}

impl Real for f64 {}
impl Real for f32 {}
