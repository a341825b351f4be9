use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::generalization::LinearQuery;
use crate::prob::Space;
use crate::world::{MechanismKernel, SampleFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Laplace,
    Gaussian,
}

/// Additive noise quantized onto the grid `{k·step : |k·step| ≤ Δ + halfwidth}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    /// Laplace `b` or Gaussian `σ`.
    pub scale: f64,
    pub grid_step: f64,
    pub grid_halfwidth: f64,
}

impl NoiseSpec {
    /// Grid at most as coarse as `scale / 4`, wide enough for the validity rule.
    pub fn with_default_grid(family: NoiseFamily, scale: f64, delta_bound: f64) -> Self {
        Self {
            family,
            scale,
            grid_step: scale / 4.0,
            grid_halfwidth: delta_bound + 6.0 * scale,
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match self.family {
            NoiseFamily::Laplace => {
                let b = self.scale;
                if x < 0.0 {
                    0.5 * (x / b).exp()
                } else {
                    1.0 - 0.5 * (-x / b).exp()
                }
            }
            NoiseFamily::Gaussian => 0.5 * (1.0 + erf(x / (self.scale * std::f64::consts::SQRT_2))),
        }
    }

    pub fn validate(&self, delta_bound: f64) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Configuration(format!("noise scale {} must be positive", self.scale)));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::Configuration("grid step must be positive".into()));
        }
        if self.grid_step > self.scale {
            return Err(Error::Configuration(format!(
                "grid step {} is coarser than the noise scale {}",
                self.grid_step, self.scale
            )));
        }
        if self.grid_halfwidth < delta_bound + 5.0 * self.scale {
            return Err(Error::Configuration(format!(
                "grid halfwidth {} is below Δ + 5·scale = {}",
                self.grid_halfwidth,
                delta_bound + 5.0 * self.scale
            )));
        }
        Ok(())
    }

    /// Grid values `k·step` covering `[−Δ − halfwidth, Δ + halfwidth]`.
    pub fn grid(&self, delta_bound: f64) -> Vec<f64> {
        let k = ((delta_bound + self.grid_halfwidth) / self.grid_step - 1e-9).ceil() as i64;
        (-k..=k).map(|i| i as f64 * self.grid_step).collect()
    }

    /// Quantized, truncated and renormalized noise centered at `center`.
    pub fn row(&self, grid: &[f64], center: f64) -> Vec<f64> {
        let half = self.grid_step / 2.0;
        let mut w: Vec<f64> = grid
            .iter()
            .map(|g| (self.cdf(g + half - center) - self.cdf(g - half - center)).max(0.0))
            .collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        w
    }
}

pub(crate) fn grid_labels(grid: &[f64], step: f64) -> Space {
    let prec = ((-step.log10()).ceil().max(0.0) as usize) + 3;
    Space::labeled(grid.iter().map(|v| {
        let v = if v.abs() < step / 2.0 { 0.0 } else { *v };
        format!("{v:.prec$}")
    }))
    .expect("grid labels are distinct")
}

/// Answers `query` with quantized additive noise.
pub fn build_noise_mechanism(
    query: &LinearQuery,
    spec: &NoiseSpec,
    frame: &SampleFrame,
) -> Result<MechanismKernel<f64>> {
    query.check_domain(frame.domain())?;
    spec.validate(query.delta_bound)?;
    let grid = spec.grid(query.delta_bound);
    let ts = *frame.tuples();
    let labels = grid_labels(&grid, spec.grid_step);
    MechanismKernel::from_fn(frame, labels, |s| spec.row(&grid, query.on_tuple(&ts, s)))?
        .with_response_values(grid)
}
