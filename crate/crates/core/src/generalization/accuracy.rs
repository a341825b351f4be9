use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{stream_rng, Answerer, Estimate, TupleSampler};
use super::LinearQuery;
use crate::adaptivity::{AdaptiveRun, Round};
use crate::error::{Error, Result};
use crate::prob::FiniteDist;
use crate::scalar::Scalar;
use crate::world::World;

// Responses on a grid can sit exactly at the threshold; treat those as accurate.
const EDGE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// Error measured against `q(s)`.
    Sample,
    /// Error measured against `q(D)`.
    Distribution,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub eps: f64,
    /// `Pr[max_i |R_i − target_i| > ε]`
    pub delta_star: f64,
    pub mode: AccuracyMode,
    pub k: usize,
    /// Present for Monte Carlo estimates.
    pub std_err: Option<f64>,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArguments(format!("ε = {eps} must be non-negative")));
    }
    Ok(())
}

/// Exact failure probability of a single mechanism answering `query`.
pub fn accuracy_certify<T: Scalar>(
    world: &World<T>,
    query: &LinearQuery,
    eps: f64,
    mode: AccuracyMode,
) -> Result<AccuracyReport> {
    check_eps(eps)?;
    query.check_domain(world.domain())?;
    let values = world
        .kernel()
        .response_values()
        .ok_or_else(|| Error::Precondition("accuracy needs numeric response values".into()))?;
    let ts = *world.frame().tuples();
    let prior = world.tuple_weights();
    let population = super::query_value_on_world(query, world)?;
    let kernel = world.kernel();
    let fail: f64 = (0..ts.count())
        .into_par_iter()
        .with_min_len(1024)
        .map(|s| {
            let ps = prior[s].as_f64();
            if ps <= 0.0 {
                return 0.0;
            }
            let target = match mode {
                AccuracyMode::Sample => query.on_tuple(&ts, s),
                AccuracyMode::Distribution => population,
            };
            let bad: f64 = kernel
                .row(s)
                .iter()
                .zip(values)
                .filter(|(_, v)| (*v - target).abs() > eps + EDGE)
                .map(|(k, _)| k.as_f64())
                .sum();
            ps * bad
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(AccuracyReport {
        eps,
        delta_star: fail.min(1.0),
        mode,
        k: 1,
        std_err: None,
    })
}

/// Exact failure probability of an adaptive run whose rounds answer linear
/// queries; `queries` maps every query id to its definition.
pub fn accuracy_certify_run(
    run: &AdaptiveRun<f64>,
    rounds: &[Round<f64>],
    queries: &BTreeMap<String, LinearQuery>,
    eps: f64,
    mode: AccuracyMode,
) -> Result<AccuracyReport> {
    check_eps(eps)?;
    let k = run.k();
    let ts = *run.frame().tuples();
    let element_prior = run.element_prior();
    let mut per_round_values = Vec::with_capacity(k);
    for round in rounds.iter().take(k) {
        let (id, first) = round
            .queries()
            .next()
            .ok_or_else(|| Error::InvalidArguments("empty round".into()))?;
        let vals = first.response_values().ok_or_else(|| {
            Error::Precondition(format!("query `{id}` has no numeric response values"))
        })?;
        for (id, kern) in round.queries() {
            if kern.response_values() != Some(vals) {
                return Err(Error::Precondition(format!(
                    "query `{id}` maps responses to different values"
                )));
            }
        }
        per_round_values.push(vals.to_vec());
    }
    let lookup = |id: &str| queries.get(id).ok_or_else(|| Error::UnknownQuery(id.to_string()));

    let mut fail = 0.0;
    for (vi, view) in run.final_views().iter().enumerate() {
        let path = run.query_path(k, vi);
        let qs = path.iter().map(|id| lookup(id)).collect::<Result<Vec<_>>>()?;
        let pops: Vec<f64> = qs.iter().map(|q| q.on_elements(element_prior)).collect();
        for (s, w) in view.joint().iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            let sample = ts.decode(s);
            let bad = (0..k).any(|i| {
                let r = per_round_values[i][view.responses[i]];
                let target = match mode {
                    AccuracyMode::Sample => qs[i].on_sample(&sample),
                    AccuracyMode::Distribution => pops[i],
                };
                (r - target).abs() > eps + EDGE
            });
            if bad {
                fail += *w;
            }
        }
    }
    Ok(AccuracyReport {
        eps,
        delta_star: fail.min(1.0),
        mode,
        k,
        std_err: None,
    })
}

/// Seeded Monte Carlo estimate for instances too large to enumerate.
pub fn accuracy_monte_carlo(
    element_dist: &FiniteDist<f64>,
    n: usize,
    query: &LinearQuery,
    answerer: &Answerer,
    eps: f64,
    mode: AccuracyMode,
    samples: usize,
    seed: u64,
) -> Result<AccuracyReport> {
    check_eps(eps)?;
    if samples == 0 {
        return Err(Error::InvalidArguments("Monte Carlo needs at least one sample".into()));
    }
    if query.values.len() != element_dist.len() {
        return Err(Error::DomainMismatch("query and element distribution differ in size".into()));
    }
    answerer.validate(query.delta_bound)?;
    let sampler = TupleSampler::new(element_dist, n)?;
    let population = query.on_elements(element_dist);
    const BLOCK: usize = 1024;
    let blocks = samples.div_ceil(BLOCK);
    let hits: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let len = BLOCK.min(samples - b * BLOCK);
            (0..len)
                .map(|_| {
                    let s = sampler.draw(&mut rng);
                    let r = answerer.answer(query, &s, &mut rng);
                    let target = match mode {
                        AccuracyMode::Sample => query.on_sample(&s),
                        AccuracyMode::Distribution => population,
                    };
                    if (r - target).abs() > eps + EDGE {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let est = Estimate::from_samples(&hits);
    Ok(AccuracyReport {
        eps,
        delta_star: est.mean,
        mode,
        k: 1,
        std_err: Some(est.std_err),
    })
}
