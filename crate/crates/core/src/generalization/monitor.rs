use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expectation::assessment_values;
use super::sampling::{stream_rng, Answerer, Estimate, TupleSampler};
use super::LinearQuery;
use crate::adaptivity::AdaptiveRun;
use crate::error::{Error, Result};
use crate::prob::FiniteDist;
use crate::stability::lss_certify;
use crate::world::{induce, Budget, TupleSpace};

const KEY_TOL: f64 = 1e-12;

/// An analyst that chooses linear queries from the answers so far.
pub trait QueryAnalyst: Sync {
    fn rounds(&self) -> usize;

    /// Δ shared by every query the analyst asks.
    fn delta_bound(&self) -> f64;

    fn next_query(&self, history: &[(LinearQuery, f64)]) -> Result<LinearQuery>;
}

/// Asks one indicator query per domain element, then a query that is `+Δ`
/// on every element whose indicator answer exceeded `Δ/(2n)` and `−Δ` elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructThenOverfit {
    domain_size: usize,
    delta_bound: f64,
    threshold: f64,
}

impl ReconstructThenOverfit {
    pub fn new(domain_size: usize, n: usize, delta_bound: f64) -> Result<Self> {
        if domain_size == 0 || n == 0 {
            return Err(Error::InvalidArguments("domain and sample size must be positive".into()));
        }
        if !(delta_bound > 0.0) {
            return Err(Error::InvalidArguments(format!("Δ = {delta_bound} must be positive")));
        }
        Ok(Self {
            domain_size,
            delta_bound,
            threshold: delta_bound / (2 * n) as f64,
        })
    }
}

impl QueryAnalyst for ReconstructThenOverfit {
    fn rounds(&self) -> usize {
        self.domain_size + 1
    }

    fn delta_bound(&self) -> f64 {
        self.delta_bound
    }

    fn next_query(&self, history: &[(LinearQuery, f64)]) -> Result<LinearQuery> {
        let i = history.len();
        if i < self.domain_size {
            return LinearQuery::indicator(format!("ind:{i}"), self.domain_size, i, self.delta_bound);
        }
        if i > self.domain_size {
            return Err(Error::InvalidArguments(format!("round {i} is past the last round")));
        }
        let values = history
            .iter()
            .map(|(_, r)| if *r > self.threshold { self.delta_bound } else { -self.delta_bound })
            .collect();
        LinearQuery::new("overfit", values, self.delta_bound)
    }
}

/// What one copy hands to the monitor: its worst query, sign-corrected so
/// that `q(D) ≥ r`.
#[derive(Clone, Debug, PartialEq)]
struct Pick {
    query_id: String,
    /// `q(D) − r`
    dist: f64,
    /// `q(S) − r`
    samp: f64,
}

fn pick(asked: &[(LinearQuery, f64, f64)], element_dist: &FiniteDist<f64>) -> Pick {
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, (q, r, _)) in asked.iter().enumerate() {
        let pop = q.on_elements(element_dist);
        let err = (pop - r).abs();
        if best.is_none_or(|(_, e, _)| err > e) {
            best = Some((j, err, pop));
        }
    }
    let (j, _, pop) = best.expect("at least one round");
    let (q, r, emp) = &asked[j];
    if pop >= *r {
        Pick {
            query_id: q.id.clone(),
            dist: pop - r,
            samp: emp - r,
        }
    } else {
        Pick {
            query_id: format!("-{}", q.id),
            dist: r - pop,
            samp: r - emp,
        }
    }
}

fn check_setup(analyst: &dyn QueryAnalyst, answerer: &Answerer, t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidArguments("the monitor needs at least one copy".into()));
    }
    if analyst.rounds() == 0 {
        return Err(Error::InvalidArguments("the analyst asks no queries".into()));
    }
    answerer.validate(analyst.delta_bound())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub t: usize,
    pub trials: usize,
    pub seed: u64,
}

/// One copy of one trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CopyRecord {
    pub trial: usize,
    pub copy: usize,
    pub query_id: String,
    /// `q(D) − r` of the copy's worst query.
    pub max_error: f64,
    /// `q(S) − r` of the same query.
    pub sample_error: f64,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorReport {
    pub t: usize,
    pub trials: usize,
    pub seed: u64,
    pub queries_per_copy: usize,
    /// `E[q(D) − r]` of the selected query.
    pub distribution_error: Estimate,
    /// `E[q(S) − r]` of the selected query.
    pub sample_error: Estimate,
    /// `E[q(D) − q(S)]`, paired within each trial.
    pub gap: Estimate,
    pub copies: Vec<CopyRecord>,
}

/// Index of the largest key, ties to the lowest index.
fn argmax_first(keys: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, k) in keys.enumerate() {
        if k > best.1 {
            best = (i, k);
        }
    }
    best.0
}

/// Seeded Monte Carlo run of the monitor over `t` independent copies of the
/// interaction between `analyst` and `answerer` on samples of size `n`.
pub fn monitor_run(
    element_dist: &FiniteDist<f64>,
    n: usize,
    analyst: &dyn QueryAnalyst,
    answerer: &Answerer,
    config: &MonitorConfig,
) -> Result<MonitorReport> {
    let MonitorConfig { t, trials, seed } = *config;
    check_setup(analyst, answerer, t)?;
    if trials == 0 {
        return Err(Error::InvalidArguments("at least one trial is needed".into()));
    }
    let sampler = TupleSampler::new(element_dist, n)?;
    let k = analyst.rounds();

    let picks: Vec<Pick> = (0..trials * t)
        .into_par_iter()
        .map(|job| {
            let mut rng = stream_rng(seed, job as u64);
            let sample = sampler.draw(&mut rng);
            let mut history: Vec<(LinearQuery, f64)> = Vec::with_capacity(k);
            let mut asked = Vec::with_capacity(k);
            for _ in 0..k {
                let q = analyst.next_query(&history)?;
                if q.values.len() != element_dist.len() {
                    return Err(Error::DomainMismatch(format!("query `{}` has the wrong arity", q.id)));
                }
                let r = answerer.answer(&q, &sample, &mut rng);
                asked.push((q.clone(), r, q.on_sample(&sample)));
                history.push((q, r));
            }
            Ok(pick(&asked, element_dist))
        })
        .collect::<Result<_>>()?;

    let mut copies = Vec::with_capacity(trials * t);
    let mut dist = Vec::with_capacity(trials);
    let mut samp = Vec::with_capacity(trials);
    let mut gap = Vec::with_capacity(trials);
    for (trial, chunk) in picks.chunks(t).enumerate() {
        let i = argmax_first(chunk.iter().map(|p| p.dist));
        dist.push(chunk[i].dist);
        samp.push(chunk[i].samp);
        gap.push(chunk[i].dist - chunk[i].samp);
        for (copy, p) in chunk.iter().enumerate() {
            copies.push(CopyRecord {
                trial,
                copy,
                query_id: p.query_id.clone(),
                max_error: p.dist,
                sample_error: p.samp,
                selected: copy == i,
            });
        }
    }
    Ok(MonitorReport {
        t,
        trials,
        seed,
        queries_per_copy: k,
        distribution_error: Estimate::from_samples(&dist),
        sample_error: Estimate::from_samples(&samp),
        gap: Estimate::from_samples(&gap),
        copies,
    })
}

/// One outcome of a single copy with its probability.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Outcome {
    pub(crate) prob: f64,
    pub(crate) key: f64,
    pub(crate) values: [f64; 3],
}

/// `E[values of the winning copy]` when `t` iid copies compete on `key`,
/// the earliest copy winning ties. Copy `i` wins with outcome `a` with
/// probability `p_a · F⁻(a)^{i−1} · F(a)^{t−i}`.
pub(crate) fn select_expectation(outcomes: &[Outcome], t: usize) -> [f64; 3] {
    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| outcomes[a].key.total_cmp(&outcomes[b].key));
    let mut out = [0.0; 3];
    let mut below = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        let mut group = 0.0;
        let lead = outcomes[order[start]].key;
        while end < order.len() && outcomes[order[end]].key - lead <= KEY_TOL {
            group += outcomes[order[end]].prob;
            end += 1;
        }
        let strict = below;
        let weak = below + group;
        let weight: f64 = (1..=t)
            .map(|i| strict.powi(i as i32 - 1) * weak.powi((t - i) as i32))
            .sum();
        for &a in &order[start..end] {
            for (o, v) in out.iter_mut().zip(outcomes[a].values) {
                *o += outcomes[a].prob * weight * v;
            }
        }
        below = weak;
        start = end;
    }
    out
}

/// Exact expectations of the monitor, by enumerating every sample tuple and
/// every answer sequence of one copy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonitorExact {
    pub t: usize,
    pub distribution_error: f64,
    pub sample_error: f64,
    pub gap: f64,
    /// Number of (tuple, answer sequence) outcomes of a single copy.
    pub outcomes: usize,
}

fn copy_outcomes(
    element_dist: &FiniteDist<f64>,
    n: usize,
    analyst: &dyn QueryAnalyst,
    answerer: &Answerer,
    budget: &Budget,
) -> Result<Vec<Outcome>> {
    let ts = TupleSpace::new(element_dist.len(), n, budget)?;
    let weights = element_dist.weights();
    let k = analyst.rounds();
    let per_tuple: Vec<Vec<Outcome>> = (0..ts.count())
        .into_par_iter()
        .map(|s| {
            let sample = ts.decode(s);
            let p: f64 = sample.iter().map(|&x| weights[x]).product();
            if p <= 0.0 {
                return Ok(Vec::new());
            }
            // Depth-first over answer sequences.
            let mut out = Vec::new();
            let mut stack: Vec<(Vec<(LinearQuery, f64, f64)>, f64)> = vec![(Vec::new(), p)];
            while let Some((asked, mass)) = stack.pop() {
                if asked.len() == k {
                    let pk = pick(&asked, element_dist);
                    out.push(Outcome {
                        prob: mass,
                        key: pk.dist,
                        values: [pk.dist, pk.samp, pk.dist - pk.samp],
                    });
                    budget.check("monitor outcomes", out.len() as u128, budget.max_views)?;
                    continue;
                }
                let history: Vec<(LinearQuery, f64)> = asked.iter().map(|(q, r, _)| (q.clone(), *r)).collect();
                let q = analyst.next_query(&history)?;
                let emp = q.on_sample(&sample);
                for (r, pr) in answerer.outcomes(&q, emp) {
                    let mut next = asked.clone();
                    next.push((q.clone(), r, emp));
                    stack.push((next, mass * pr));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let out: Vec<Outcome> = per_tuple.into_iter().flatten().collect();
    budget.check("monitor outcomes", out.len() as u128, budget.max_views)?;
    Ok(out)
}

/// Exact monitor expectations for tiny worlds, for any number of copies.
pub fn monitor_exact(
    element_dist: &FiniteDist<f64>,
    n: usize,
    analyst: &dyn QueryAnalyst,
    answerer: &Answerer,
    t: usize,
    budget: &Budget,
) -> Result<MonitorExact> {
    check_setup(analyst, answerer, t)?;
    let outcomes = copy_outcomes(element_dist, n, analyst, answerer, budget)?;
    let [d, s, g] = select_expectation(&outcomes, t);
    Ok(MonitorExact {
        t,
        distribution_error: d,
        sample_error: s,
        gap: g,
        outcomes: outcomes.len(),
    })
}

/// `ε + 2tδΔ` and `ε(1 − (1 − δ)^t)`: the sample-error ceiling and
/// distribution-error floor of the monitor argument.
pub fn monitor_bounds(eps: f64, delta: f64, t: usize, delta_bound: f64) -> (f64, f64) {
    (
        eps + 2.0 * t as f64 * delta * delta_bound,
        eps * (1.0 - (1.0 - delta).powi(t as i32)),
    )
}

/// Per-view quantities of the second monitor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViewAssessment {
    pub label: String,
    pub mass: f64,
    pub loss: f64,
    pub query: LinearQuery,
    /// `q̃_v(D) − E[q̃_v(S) | v]`, summed over tuples.
    pub gap: f64,
}

pub fn assess_views(run: &AdaptiveRun<f64>, delta_bound: f64) -> Result<Vec<ViewAssessment>> {
    if !(delta_bound > 0.0) {
        return Err(Error::InvalidArguments(format!("Δ = {delta_bound} must be positive")));
    }
    let ts = *run.frame().tuples();
    let prior = run.element_prior();
    run.final_views()
        .par_iter()
        .map(|v| {
            let values = assessment_values(prior.weights(), v.element_posterior.weights(), delta_bound);
            let query = LinearQuery::new(format!("loss:{}", run.view_label(v)), values, delta_bound)?;
            let pop = query.on_elements(prior);
            let cond: f64 = v
                .joint()
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(s, w)| w * query.on_tuple(&ts, s))
                .sum::<f64>()
                / v.mass;
            Ok(ViewAssessment {
                label: run.view_label(v),
                mass: v.mass,
                loss: v.loss,
                gap: pop - cond,
                query,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondMonitorReport {
    pub t: usize,
    pub delta_bound: f64,
    /// Round `k + 1` carries the loss-assessment query.
    pub queries_per_copy: usize,
    /// `E[g(v_I)]` from the selection formula.
    pub exact_gap: f64,
    /// `2Δ·E[max_i ℓ(v_i)]`
    pub exact_gap_from_losses: f64,
    pub monte_carlo: Estimate,
    pub seed: u64,
    pub eps: f64,
    /// `D({v : ℓ(v) > ε})`
    pub unstable_mass: f64,
    /// `2Δε(1 − (1 − D(V_ε))^t)`
    pub lower_bound: f64,
}

/// The second monitor: run `t` copies, keep the copy whose view lost the most
/// stability and ask its loss-assessment query.
pub fn second_monitor_run(
    run: &AdaptiveRun<f64>,
    delta_bound: f64,
    eps: f64,
    config: &MonitorConfig,
) -> Result<SecondMonitorReport> {
    let MonitorConfig { t, trials, seed } = *config;
    if t == 0 || trials == 0 {
        return Err(Error::InvalidArguments("copies and trials must be positive".into()));
    }
    let views = assess_views(run, delta_bound)?;

    let outcomes: Vec<Outcome> = views
        .iter()
        .map(|v| Outcome {
            prob: v.mass,
            key: v.loss,
            values: [v.gap, 0.0, 0.0],
        })
        .collect();
    let exact_gap = select_expectation(&outcomes, t)[0];

    // E[max] = Σ_j ℓ_j (F(ℓ_j)^t − F⁻(ℓ_j)^t) over distinct losses.
    let mut losses: Vec<(f64, f64)> = views.iter().map(|v| (v.loss, v.mass)).collect();
    losses.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut expected_max = 0.0;
    let mut below = 0.0;
    let mut i = 0;
    while i < losses.len() {
        let lead = losses[i].0;
        let mut group = 0.0;
        while i < losses.len() && losses[i].0 - lead <= KEY_TOL {
            group += losses[i].1;
            i += 1;
        }
        let above = below + group;
        expected_max += lead * (above.powi(t as i32) - below.powi(t as i32));
        below = above;
    }

    let view_index = WeightedIndex::new(views.iter().map(|v| v.mass))
        .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let tuple_index: Vec<WeightedIndex<f64>> = run
        .final_views()
        .iter()
        .map(|v| WeightedIndex::new(v.joint()).map_err(|e| Error::InvalidDistribution(e.to_string())))
        .collect::<Result<_>>()?;
    let ts = *run.frame().tuples();
    let prior = run.element_prior();
    let draws: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial as u64);
            let copies: Vec<(usize, usize)> = (0..t)
                .map(|_| {
                    let v = view_index.sample(&mut rng);
                    (v, tuple_index[v].sample(&mut rng))
                })
                .collect();
            let i = argmax_first(copies.iter().map(|(v, _)| views[*v].loss));
            let (v, s) = copies[i];
            let q = &views[v].query;
            q.on_elements(prior) - q.on_tuple(&ts, s)
        })
        .collect();

    let unstable_mass: f64 = views.iter().filter(|v| v.loss > eps).map(|v| v.mass).sum();
    Ok(SecondMonitorReport {
        t,
        delta_bound,
        queries_per_copy: run.k() + 1,
        exact_gap,
        exact_gap_from_losses: 2.0 * delta_bound * expected_max,
        monte_carlo: Estimate::from_samples(&draws),
        seed,
        eps,
        unstable_mass,
        lower_bound: 2.0 * delta_bound * eps * (1.0 - (1.0 - unstable_mass).powi(t as i32)),
    })
}

/// Compares the k-round stability of a run with the accuracy of the extra
/// loss-assessment query answered by the empirical mean.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NecessityReport {
    pub eps: f64,
    pub delta: f64,
    pub lss_delta_star: f64,
    pub lss_holds: bool,
    /// `ε/5`
    pub accuracy_eps: f64,
    /// `εδ/(5Δ)`
    pub accuracy_delta: f64,
    pub sample_failure: f64,
    /// `Pr[|q̃_V(S) − q̃_V(D)| > ε/5]`, measured on the final query only.
    pub distribution_failure: f64,
    pub accurate: bool,
    /// Stable, or not accurate in both senses.
    pub pass: bool,
    pub queries: usize,
}

pub fn necessity_check(run: &AdaptiveRun<f64>, delta_bound: f64, eps: f64, delta: f64) -> Result<NecessityReport> {
    if !(eps > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArguments(format!("(ε, δ) = ({eps}, {delta}) is out of range")));
    }
    let ind = induce(&run.to_world()?)?;
    let cert = lss_certify(&ind, eps)?;
    let views = assess_views(run, delta_bound)?;
    let ts = *run.frame().tuples();
    let prior = run.element_prior();
    let acc_eps = eps / 5.0;
    let acc_delta = eps * delta / (5.0 * delta_bound);
    let mut sample_failure = 0.0;
    let mut distribution_failure = 0.0;
    for (node, view) in run.final_views().iter().zip(&views) {
        let pop = view.query.on_elements(prior);
        for (s, w) in node.joint().iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            let emp = view.query.on_tuple(&ts, s);
            let answer = emp;
            if (answer - emp).abs() > acc_eps + 1e-12 {
                sample_failure += w;
            }
            if (answer - pop).abs() > acc_eps + 1e-12 {
                distribution_failure += w;
            }
        }
    }
    let lss_holds = cert.holds(delta);
    let accurate = sample_failure <= acc_delta && distribution_failure <= acc_delta;
    Ok(NecessityReport {
        eps,
        delta,
        lss_delta_star: cert.delta_star,
        lss_holds,
        accuracy_eps: acc_eps,
        accuracy_delta: acc_delta,
        sample_failure,
        distribution_failure,
        accurate,
        pass: lss_holds || !accurate,
        queries: run.k() + 1,
    })
}
