use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LinearQuery;
use crate::error::{Error, Result};
use crate::mechanisms::NoiseSpec;
use crate::prob::FiniteDist;

/// How a query gets answered in sampled experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Answerer {
    /// The exact empirical mean `q(s)`.
    EmpiricalMean,
    /// `q(s)` plus quantized noise, as built by the noise mechanisms.
    Noise(NoiseSpec),
}

impl Answerer {
    pub fn validate(&self, delta_bound: f64) -> Result<()> {
        match self {
            Answerer::EmpiricalMean => Ok(()),
            Answerer::Noise(spec) => spec.validate(delta_bound),
        }
    }

    /// Response distribution for a query whose empirical value is `value`,
    /// as `(response, probability)` pairs with positive probability.
    pub fn outcomes(&self, q: &LinearQuery, value: f64) -> Vec<(f64, f64)> {
        match self {
            Answerer::EmpiricalMean => vec![(value, 1.0)],
            Answerer::Noise(spec) => {
                let grid = spec.grid(q.delta_bound);
                let row = spec.row(&grid, value);
                grid.into_iter().zip(row).filter(|(_, p)| *p > 0.0).collect()
            }
        }
    }

    pub fn answer<R: Rng + ?Sized>(&self, q: &LinearQuery, sample: &[usize], rng: &mut R) -> f64 {
        let value = q.on_sample(sample);
        match self {
            Answerer::EmpiricalMean => value,
            Answerer::Noise(spec) => {
                let grid = spec.grid(q.delta_bound);
                let row = spec.row(&grid, value);
                let pick = WeightedIndex::new(&row).expect("noise row has positive mass");
                grid[pick.sample(rng)]
            }
        }
    }
}

/// Draws iid sample tuples from an element distribution.
pub(crate) struct TupleSampler {
    index: WeightedIndex<f64>,
    n: usize,
}

impl TupleSampler {
    pub(crate) fn new(element_dist: &FiniteDist<f64>, n: usize) -> Result<Self> {
        let index = WeightedIndex::new(element_dist.weights())
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(Self { index, n })
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.n).map(|_| self.index.sample(rng)).collect()
    }
}

/// Independent generator for stream `stream` of a seeded experiment.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sample mean with its standard error and a normal 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let m = xs.len();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = if m > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64
        } else {
            0.0
        };
        let std_err = (var / m as f64).sqrt();
        Self {
            mean,
            std_err,
            ci_low: mean - 1.96 * std_err,
            ci_high: mean + 1.96 * std_err,
            samples: m,
        }
    }

    pub fn excludes(&self, value: f64) -> bool {
        value < self.ci_low || value > self.ci_high
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(7, 1).random();
        let b: u64 = stream_rng(7, 1).random();
        let c: u64 = stream_rng(7, 2).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
