//! Exact finite-probability lab for stability notions of query-answering
//! mechanisms.
//!
//! Everything is computed by enumerating finite worlds: a domain, a prior over
//! ordered sample tuples and a stochastic kernel from tuples to responses.
//! Core routines are generic over [`Scalar`] so tiny instances can be checked
//! with exact rationals; the aliases below fix the common choices.

pub mod adaptivity;
pub mod error;
pub mod generalization;
pub mod mechanisms;
pub mod notions;
pub mod prob;
pub mod scalar;
pub mod stability;
pub mod world;

pub use error::{Error, Result};
pub use scalar::{Rational, Real, Scalar};

/// Double-precision distribution, the default working type.
pub type Dist = prob::FiniteDist<f64>;
/// Exact rational distribution.
pub type ExactDist = prob::FiniteDist<Rational>;
pub type Joint = prob::JointDist<f64>;
pub type World64 = world::World<f64>;
pub type ExactWorld = world::World<Rational>;
pub type Induced = world::InducedDistributions<f64>;
