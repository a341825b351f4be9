//! Mechanism constructors: quantized noise, counterexample mechanisms and
//! compression schemes.

mod compression;
mod discrete;
mod noise;

pub use compression::{build_compression_mechanism, CompressionSpec, Encoder, Selector};
pub use discrete::{build_element_release, build_parity_mechanism, build_randomized_response};
pub use noise::{build_noise_mechanism, NoiseFamily, NoiseSpec};

use crate::generalization::LinearQuery;
use crate::prob::Space;
use crate::world::{MechanismKernel, SampleFrame};

/// Answers `query` with its exact empirical mean `q(s)`.
///
/// Responses are the distinct values `q` takes on tuples, sorted ascending.
pub fn build_empirical_mean(query: &LinearQuery, frame: &SampleFrame) -> crate::Result<MechanismKernel<f64>> {
    query.check_domain(frame.domain())?;
    let ts = *frame.tuples();
    let values: Vec<f64> = (0..ts.count()).map(|s| query.on_tuple(&ts, s)).collect();
    let mut distinct = values.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let labels = Space::labeled(distinct.iter().enumerate().map(|(i, v)| format!("{i}:{v:.6}")))
        .expect("indexed labels are distinct");
    let lookup = |v: f64| {
        distinct
            .binary_search_by(|d| if (d - v).abs() < 1e-12 { std::cmp::Ordering::Equal } else { d.total_cmp(&v) })
            .expect("value present")
    };
    MechanismKernel::deterministic(frame, labels, |s| lookup(values[s])).with_response_values(distinct.clone())
}
