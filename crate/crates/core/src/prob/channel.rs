
use super::{FiniteDist, Space};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A stochastic matrix from `input` to `output`, stored densely.
///
/// Rows may be absent; absent rows are only legal on inputs that carry no
/// probability mass wherever the channel is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel<T> {
    input: Space,
    output: Space,
    weights: Vec<T>,
    present: Vec<bool>,
}

impl<T: Scalar> Channel<T> {
    pub fn new(input: Space, output: Space) -> Self {
        let cells = input.len() * output.len();
        Self {
            weights: vec![T::zero(); cells],
            present: vec![false; input.len()],
            input,
            output,
        }
    }

    /// Builds every row with `f`, validating each one.
    pub fn from_fn(
        input: Space,
        output: Space,
        mut f: impl FnMut(usize) -> Vec<T>,
    ) -> Result<Self> {
        let mut ch = Self::new(input, output);
        for i in 0..ch.input.len() {
            ch.set_row(i, f(i))?;
        }
        Ok(ch)
    }

    /// Row `i` becomes a point mass on `f(i)`.
    pub fn deterministic(input: Space, output: Space, f: impl Fn(usize) -> usize) -> Self {
        let mut ch = Self::new(input, output);
        let w = ch.output.len();
        for i in 0..ch.input.len() {
            ch.weights[i * w + f(i)] = T::one();
            ch.present[i] = true;
        }
        ch
    }

    pub fn identity(space: Space) -> Self {
        Self::deterministic(space.clone(), space, |i| i)
    }

    pub fn set_row(&mut self, i: usize, row: Vec<T>) -> Result<()> {
        let row = FiniteDist::new(self.output.clone(), row)
            .map_err(|e| Error::InvalidDistribution(format!("row {i}: {e}")))?;
        let w = self.output.len();
        self.weights[i * w..(i + 1) * w].copy_from_slice(row.weights());
        self.present[i] = true;
        Ok(())
    }

    pub fn input(&self) -> &Space {
        &self.input
    }

    pub fn output(&self) -> &Space {
        &self.output
    }

    pub fn has_row(&self, i: usize) -> bool {
        self.present[i]
    }

    /// Row weights; zeros for absent rows.
    pub fn row(&self, i: usize) -> &[T] {
        let w = self.output.len();
        &self.weights[i * w..(i + 1) * w]
    }

    pub fn row_dist(&self, i: usize) -> Option<FiniteDist<T>> {
        self.present[i]
            .then(|| FiniteDist::from_parts_unchecked(self.output.clone(), self.row(i).to_vec()))
    }

    pub fn get(&self, i: usize, o: usize) -> T {
        self.weights[i * self.output.len() + o]
    }

    /// Sequential composition `self` then `next`.
    pub fn then(&self, next: &Channel<T>) -> Result<Channel<T>> {
        if self.output != next.input {
            return Err(Error::DomainMismatch(format!(
                "cannot compose {:?} into {:?}",
                self.output, next.input
            )));
        }
        let mut out = Channel::new(self.input.clone(), next.output.clone());
        let w = next.output.len();
        for i in 0..self.input.len() {
            if !self.present[i] {
                continue;
            }
            let mut row = vec![T::zero(); w];
            for (mid, p) in self.row(i).iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                if !next.present[mid] {
                    return Err(Error::DomainMismatch(format!(
                        "composed channel has no row for intermediate outcome {}",
                        next.input.label(mid)
                    )));
                }
                for (o, q) in next.row(mid).iter().enumerate() {
                    row[o] = row[o] + *p * *q;
                }
            }
            out.weights[i * w..(i + 1) * w].copy_from_slice(&row);
            out.present[i] = true;
        }
        Ok(out)
    }
}
