use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::FiniteDist;
use crate::scalar::Scalar;
use crate::world::{Domain, TupleSpace, World};

/// A linear query `q(s) = (1/n) Σ q₁(s_i)` with `|q₁| ≤ Δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearQuery {
    pub id: String,
    /// `q₁(x)` in domain order.
    pub values: Vec<f64>,
    /// Δ
    pub delta_bound: f64,
}

impl LinearQuery {
    pub fn new(id: impl Into<String>, values: Vec<f64>, delta_bound: f64) -> Result<Self> {
        if !(delta_bound > 0.0) || !delta_bound.is_finite() {
            return Err(Error::InvalidArguments(format!("Δ = {delta_bound} must be positive")));
        }
        if let Some((x, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() > delta_bound + 1e-12)
        {
            return Err(Error::InvalidArguments(format!(
                "q({x}) = {v} exceeds Δ = {delta_bound}"
            )));
        }
        Ok(Self {
            id: id.into(),
            values,
            delta_bound,
        })
    }

    /// `1{x = target}·Δ`.
    pub fn indicator(id: impl Into<String>, domain_size: usize, target: usize, delta_bound: f64) -> Result<Self> {
        let values = (0..domain_size)
            .map(|x| if x == target { delta_bound } else { 0.0 })
            .collect();
        Self::new(id, values, delta_bound)
    }

    pub fn negated(&self) -> Self {
        Self {
            id: format!("-{}", self.id),
            values: self.values.iter().map(|v| -v).collect(),
            delta_bound: self.delta_bound,
        }
    }

    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        if self.values.len() != domain.size() {
            return Err(Error::DomainMismatch(format!(
                "query `{}` has {} values for a domain of {}",
                self.id,
                self.values.len(),
                domain.size()
            )));
        }
        Ok(())
    }

    /// Empirical mean over a tuple of element indices.
    pub fn on_sample(&self, sample: &[usize]) -> f64 {
        sample.iter().map(|&x| self.values[x]).sum::<f64>() / sample.len() as f64
    }

    /// Empirical mean of the tuple with the given index.
    pub fn on_tuple(&self, ts: &TupleSpace, idx: usize) -> f64 {
        self.on_sample(&ts.decode(idx))
    }

    /// `Σ_x D(x) q₁(x)`.
    pub fn on_elements<T: Scalar>(&self, element_dist: &FiniteDist<T>) -> f64 {
        element_dist
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(p, v)| p.as_f64() * v)
            .sum()
    }
}

/// Empirical value `q(s)` of a tuple given as element indices.
pub fn query_value_on_sample(q: &LinearQuery, sample: &[usize]) -> f64 {
    q.on_sample(sample)
}

/// Population value `q(D) = Σ_x D(x) q₁(x)`, using the element marginal of the world's prior.
pub fn query_value_on_world<T: Scalar>(q: &LinearQuery, world: &World<T>) -> Result<f64> {
    q.check_domain(world.domain())?;
    let frame = world.frame();
    let ts = frame.tuples();
    let xs = frame.domain().size();
    let n = frame.n() as f64;
    let mut marginal = vec![0.0; xs];
    let mut counts = vec![0u32; xs];
    for (s, w) in world.tuple_weights().iter().enumerate() {
        let w = w.as_f64();
        if w <= 0.0 {
            continue;
        }
        ts.counts_into(s, &mut counts);
        for (m, c) in marginal.iter_mut().zip(&counts) {
            *m += w * *c as f64 / n;
        }
    }
    Ok(marginal.iter().zip(&q.values).map(|(p, v)| p * v).sum())
}
