use serde::Serialize;

use super::LinearQuery;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stability::{loss_profile, lss_certify_profile};
use crate::world::{induce, InducedDistributions, World};

/// A world whose response `r` is interpreted as the linear query `queries[r]`.
#[derive(Clone, Debug)]
pub struct QueryValuedWorld<T> {
    world: World<T>,
    queries: Vec<LinearQuery>,
    delta_bound: f64,
}

impl<T: Scalar> QueryValuedWorld<T> {
    pub fn new(world: World<T>, queries: Vec<LinearQuery>) -> Result<Self> {
        let responses = world.kernel().responses().len();
        if queries.len() != responses {
            return Err(Error::ArityMismatch {
                expected: responses,
                found: queries.len(),
            });
        }
        for q in &queries {
            q.check_domain(world.domain())?;
        }
        let delta_bound = queries
            .iter()
            .map(|q| q.delta_bound)
            .fold(f64::MIN_POSITIVE, f64::max);
        Ok(Self {
            world,
            queries,
            delta_bound,
        })
    }

    pub fn world(&self) -> &World<T> {
        &self.world
    }

    pub fn queries(&self) -> &[LinearQuery] {
        &self.queries
    }

    /// The largest Δ among the response queries.
    pub fn delta_bound(&self) -> f64 {
        self.delta_bound
    }
}

/// Both sides of the expectation bound, with the gap computed over tuples and
/// again over elements.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationReport {
    pub eps: f64,
    pub delta: f64,
    /// `|E[Q(D) − Q(S)]|` summed over tuples and responses.
    pub lhs: f64,
    /// The same quantity through element posteriors.
    pub lhs_elements: f64,
    pub bound: f64,
    /// `D(Q_ε)`
    pub unstable_mass: f64,
    /// `None` when the precondition `D(Q_ε) < δ` fails.
    pub pass: Option<bool>,
}

/// Signed `E[Q(D) − Q(S)]` by direct enumeration of tuples and responses.
fn gap_over_tuples<T: Scalar>(qw: &QueryValuedWorld<T>, ind: &InducedDistributions<T>) -> f64 {
    let world = &qw.world;
    let ts = *world.frame().tuples();
    let population: Vec<f64> = qw
        .queries
        .iter()
        .map(|q| q.on_elements(ind.element_marginal()))
        .collect();
    let kernel = world.kernel();
    let mut total = 0.0;
    for (s, p) in world.tuple_weights().iter().enumerate() {
        let p = p.as_f64();
        if p <= 0.0 {
            continue;
        }
        let sample = ts.decode(s);
        for (r, k) in kernel.row(s).iter().enumerate() {
            let k = k.as_f64();
            if k > 0.0 {
                total += p * k * (population[r] - qw.queries[r].on_sample(&sample));
            }
        }
    }
    total
}

/// Signed `Σ_r D(r) Σ_x (D(x) − D(x|r)) q_r(x)`.
fn gap_over_elements<T: Scalar>(qw: &QueryValuedWorld<T>, ind: &InducedDistributions<T>) -> f64 {
    let prior = ind.element_marginal().weights();
    let mut total = 0.0;
    for (r, q) in qw.queries.iter().enumerate() {
        let Some(post) = ind.posterior_elems(r) else {
            continue;
        };
        let inner: f64 = prior
            .iter()
            .zip(post.weights())
            .zip(&q.values)
            .map(|((p, c), v)| (p.as_f64() - c.as_f64()) * v)
            .sum();
        total += ind.marginal_r().prob(r).as_f64() * inner;
    }
    total
}

fn unstable_mass<T: Scalar>(ind: &InducedDistributions<T>, eps: T) -> Result<f64> {
    let profile = loss_profile(ind);
    Ok(lss_certify_profile(&profile, ind.marginal_r().weights(), eps)?
        .witness_mass
        .as_f64())
}

/// Exact check of `|E[Q(D) − Q(S)]| < 2Δ(ε + δ)` under `D(Q_ε) < δ`.
pub fn expectation_generalization_check<T: Scalar>(
    qw: &QueryValuedWorld<T>,
    eps: f64,
    delta: f64,
) -> Result<ExpectationReport> {
    if !(eps >= 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArguments(format!("(ε, δ) = ({eps}, {delta}) must be non-negative")));
    }
    let ind = induce(&qw.world)?;
    let mass = unstable_mass(&ind, T::of_f64(eps))?;
    let lhs = gap_over_tuples(qw, &ind).abs();
    let lhs_elements = gap_over_elements(qw, &ind).abs();
    let bound = 2.0 * qw.delta_bound * (eps + delta);
    let pass = (mass < delta).then_some(lhs < bound);
    Ok(ExpectationReport {
        eps,
        delta,
        lhs,
        lhs_elements,
        bound,
        unstable_mass: mass,
        pass,
    })
}

/// The corollary form for an (ε, δ)-LSS world: `|E[Q(D) − Q(S)]| < 2Δ(2ε + δ/ε)`
/// with δ taken from the world's own certificate.
pub fn expectation_corollary_check<T: Scalar>(qw: &QueryValuedWorld<T>, eps: f64) -> Result<ExpectationReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArguments(format!("ε = {eps} must be positive")));
    }
    let ind = induce(&qw.world)?;
    let profile = loss_profile(&ind);
    let cert = lss_certify_profile(&profile, ind.marginal_r().weights(), T::of_f64(eps))?;
    let delta = cert.delta_star.as_f64();
    let lhs = gap_over_tuples(qw, &ind).abs();
    let lhs_elements = gap_over_elements(qw, &ind).abs();
    let bound = 2.0 * qw.delta_bound * (2.0 * eps + delta / eps);
    Ok(ExpectationReport {
        eps,
        delta,
        lhs,
        lhs_elements,
        bound,
        unstable_mass: unstable_mass(&ind, T::of_f64(2.0 * eps))?,
        pass: Some(lhs < bound),
    })
}

/// `q̃_r(x) = Δ` where `D(x) > D(x|r)`, `−Δ` elsewhere. Floating-point
/// comparisons ignore differences within the scalar tolerance.
pub fn loss_assessment_query<T: Scalar>(ind: &InducedDistributions<T>, r: usize, delta_bound: f64) -> Result<LinearQuery> {
    let post = ind
        .posterior_elems(r)
        .ok_or_else(|| Error::Precondition(format!("response {} has zero mass", ind.responses().label(r))))?;
    let values = assessment_values(ind.element_marginal().weights(), post.weights(), delta_bound);
    LinearQuery::new(format!("loss:{}", ind.responses().label(r)), values, delta_bound)
}

pub(crate) fn assessment_values<T: Scalar>(prior: &[T], post: &[T], delta_bound: f64) -> Vec<f64> {
    prior
        .iter()
        .zip(post)
        .map(|(p, q)| if *p > *q + T::tolerance() { delta_bound } else { -delta_bound })
        .collect()
}

/// The world that answers with the loss-assessment query of its own response.
pub fn loss_assessment_world<T: Scalar>(world: &World<T>, delta_bound: f64) -> Result<QueryValuedWorld<T>> {
    let ind = induce(world)?;
    let xs = world.domain().size();
    let queries = (0..ind.responses().len())
        .map(|r| match ind.posterior_elems(r) {
            Some(_) => loss_assessment_query(&ind, r, delta_bound),
            None => LinearQuery::new(format!("loss:{}", ind.responses().label(r)), vec![-delta_bound; xs], delta_bound),
        })
        .collect::<Result<Vec<_>>>()?;
    QueryValuedWorld::new(world.clone(), queries)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverfitReport {
    pub eps: f64,
    pub delta: f64,
    /// `E[q̃_R(D) − q̃_R(S)]`
    pub lhs: f64,
    /// `2εΔδ`
    pub lower_bound: f64,
    /// `D(R_ε)`
    pub unstable_mass: f64,
    /// `None` when `D(R_ε) ≤ δ`.
    pub pass: Option<bool>,
}

/// Checks that the loss-assessment queries overfit by more than `2εΔδ`
/// whenever `D(R_ε) > δ`.
pub fn loss_assessment_overfit_check<T: Scalar>(
    world: &World<T>,
    delta_bound: f64,
    eps: f64,
    delta: f64,
) -> Result<OverfitReport> {
    let qw = loss_assessment_world(world, delta_bound)?;
    let ind = induce(world)?;
    let mass = unstable_mass(&ind, T::of_f64(eps))?;
    let lhs = gap_over_tuples(&qw, &ind);
    let lower_bound = 2.0 * eps * delta_bound * delta;
    Ok(OverfitReport {
        eps,
        delta,
        lhs,
        lower_bound,
        unstable_mass: mass,
        pass: (mass > delta).then_some(lhs > lower_bound),
    })
}
