use serde::Serialize;

use super::Space;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A normalized probability mass function over a finite [`Space`].
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDist<T> {
    space: Space,
    weights: Vec<T>,
}

fn validate<T: Scalar>(weights: &[T]) -> Result<()> {
    if let Some(i) = weights.iter().position(|w| *w < T::zero()) {
        return Err(Error::InvalidDistribution(format!(
            "negative weight {} at outcome {i}",
            weights[i]
        )));
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > T::tolerance() {
        return Err(Error::InvalidDistribution(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

impl<T: Scalar> FiniteDist<T> {
    pub fn new(space: Space, weights: Vec<T>) -> Result<Self> {
        if space.len() != weights.len() {
            return Err(Error::DomainMismatch(format!(
                "{} weights for a space of {} outcomes",
                weights.len(),
                space.len()
            )));
        }
        validate(&weights)?;
        Ok(Self { space, weights })
    }

    /// Normalizes non-negative weights; fails when they are all zero.
    pub fn from_unnormalized(space: Space, weights: Vec<T>) -> Result<Self> {
        if space.len() != weights.len() {
            return Err(Error::DomainMismatch(format!(
                "{} weights for a space of {} outcomes",
                weights.len(),
                space.len()
            )));
        }
        if weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidDistribution("negative weight".into()));
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        Ok(Self {
            space,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Skips validation; callers guarantee normalization.
    pub(crate) fn from_parts_unchecked(space: Space, weights: Vec<T>) -> Self {
        debug_assert_eq!(space.len(), weights.len());
        Self { space, weights }
    }

    pub fn point(space: Space, outcome: usize) -> Self {
        let mut weights = vec![T::zero(); space.len()];
        weights[outcome] = T::one();
        Self { space, weights }
    }

    pub fn uniform(space: Space) -> Self {
        let n = T::of_usize(space.len());
        let weights = vec![T::one() / n; space.len()];
        Self { space, weights }
    }

    /// Distribution over `{"0", "1"}` with `P(1) = p`.
    pub fn bernoulli(p: T) -> Result<Self> {
        Self::new(Space::numbered(2), vec![T::one() - p, p])
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn prob(&self, outcome: usize) -> T {
        self.weights[outcome]
    }

    /// Probability of a subset of outcomes.
    pub fn mass(&self, subset: &[usize]) -> T {
        subset.iter().map(|&i| self.weights[i]).sum()
    }

    /// Outcomes with strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > T::zero())
            .map(|(i, _)| i)
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U) -> FiniteDist<U> {
        FiniteDist {
            space: self.space.clone(),
            weights: self.weights.iter().map(|w| f(*w)).collect(),
        }
    }

    pub(crate) fn ensure_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DomainMismatch(format!(
                "{:?} vs {:?}",
                self.space, other.space
            )));
        }
        Ok(())
    }
}

impl<T: Scalar + Serialize> Serialize for FiniteDist<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.weights.len()))?;
        for (i, w) in self.weights.iter().enumerate() {
            map.serialize_entry(&self.space.label(i), w)?;
        }
        map.end()
    }
}

/// A probability mass function over a product `left × right`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDist<T> {
    left: Space,
    right: Space,
    weights: Vec<T>,
}

impl<T: Scalar> JointDist<T> {
    pub fn new(left: Space, right: Space, weights: Vec<T>) -> Result<Self> {
        if weights.len() != left.len() * right.len() {
            return Err(Error::DomainMismatch(format!(
                "{} weights for a {}x{} table",
                weights.len(),
                left.len(),
                right.len()
            )));
        }
        validate(&weights)?;
        Ok(Self {
            left,
            right,
            weights,
        })
    }

    pub(crate) fn from_parts_unchecked(left: Space, right: Space, weights: Vec<T>) -> Self {
        debug_assert_eq!(weights.len(), left.len() * right.len());
        Self {
            left,
            right,
            weights,
        }
    }

    /// Product of two marginals.
    pub fn product(left: &FiniteDist<T>, right: &FiniteDist<T>) -> Self {
        let mut weights = Vec::with_capacity(left.len() * right.len());
        for a in left.weights() {
            for b in right.weights() {
                weights.push(*a * *b);
            }
        }
        Self {
            left: left.space().clone(),
            right: right.space().clone(),
            weights,
        }
    }

    pub fn left(&self) -> &Space {
        &self.left
    }

    pub fn right(&self) -> &Space {
        &self.right
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.weights[a * self.right.len() + b]
    }

    pub fn row(&self, a: usize) -> &[T] {
        let w = self.right.len();
        &self.weights[a * w..(a + 1) * w]
    }

    pub fn left_marginal(&self) -> FiniteDist<T> {
        let w = self.right.len();
        let weights = (0..self.left.len())
            .map(|a| self.weights[a * w..(a + 1) * w].iter().copied().sum())
            .collect();
        FiniteDist::from_parts_unchecked(self.left.clone(), weights)
    }

    pub fn right_marginal(&self) -> FiniteDist<T> {
        let w = self.right.len();
        let mut weights = vec![T::zero(); w];
        for (i, p) in self.weights.iter().enumerate() {
            weights[i % w] = weights[i % w] + *p;
        }
        FiniteDist::from_parts_unchecked(self.right.clone(), weights)
    }

    /// Conditional distribution of `right` given left outcome `a`; `None` at zero mass.
    pub fn conditional_right(&self, a: usize) -> Option<FiniteDist<T>> {
        let row = self.row(a);
        let total: T = row.iter().copied().sum();
        if total <= T::zero() {
            return None;
        }
        Some(FiniteDist::from_parts_unchecked(
            self.right.clone(),
            row.iter().map(|w| *w / total).collect(),
        ))
    }

    /// Same joint viewed as a single distribution over cell indices.
    pub fn flatten(&self) -> FiniteDist<T> {
        FiniteDist::from_parts_unchecked(
            Space::anonymous(self.weights.len()),
            self.weights.clone(),
        )
    }

    pub(crate) fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.left != other.left || self.right != other.right {
            return Err(Error::DomainMismatch(format!(
                "joint over {:?}x{:?} vs {:?}x{:?}",
                self.left, self.right, other.left, other.right
            )));
        }
        Ok(())
    }

    pub fn total(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - T::one()).abs() <= T::tolerance()
    }
}
