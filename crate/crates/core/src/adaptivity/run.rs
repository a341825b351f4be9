use rayon::prelude::*;

use super::analyst::{Analyst, Round};
use crate::error::{Error, Result};
use crate::prob::{Channel, FiniteDist, Space};
use crate::scalar::Scalar;
use crate::stability::loss_profile;
use crate::world::{induce, Budget, MechanismKernel, SampleFrame, SamplePrior, TupleSpace, World};

/// The response to the last query, seen from the parent's posterior.
#[derive(Clone, Debug, PartialEq)]
pub struct Step<T> {
    pub query: String,
    /// `P^{v}(r)`: probability of the response under the parent posterior.
    pub prob: T,
    /// `ℓ_{P^{v}}(r)`: loss of the response measured against the parent posterior.
    pub loss: T,
}

/// A positive-mass view prefix `(c, r₁, …, r_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewNode<T> {
    pub coin: usize,
    pub responses: Vec<usize>,
    /// Index of the prefix one round shorter, in the previous level.
    pub parent: Option<usize>,
    /// `D(v)`
    pub mass: T,
    /// `ℓ(v)` against the element marginal of the prior.
    pub loss: T,
    pub element_posterior: FiniteDist<T>,
    pub step: Option<Step<T>>,
    joint: Vec<T>,
}

impl<T: Scalar> ViewNode<T> {
    /// `D(s, v)` for every tuple `s`.
    pub fn joint(&self) -> &[T] {
        &self.joint
    }

    pub fn depth(&self) -> usize {
        self.responses.len()
    }
}

/// Exact distribution over the views of an adaptive interaction, with the
/// posterior after every prefix.
#[derive(Clone, Debug)]
pub struct AdaptiveRun<T> {
    frame: SampleFrame,
    budget: Budget,
    prior: Vec<T>,
    element_prior: FiniteDist<T>,
    coin_space: Space,
    response_spaces: Vec<Space>,
    queries_asked: Vec<Vec<Option<String>>>,
    levels: Vec<Vec<ViewNode<T>>>,
}

pub(crate) fn element_projection<T: Scalar>(ts: &TupleSpace, xs: usize, weights: &[T]) -> Vec<T> {
    let n = T::of_usize(ts.n());
    let mut out = vec![T::zero(); xs];
    let mut counts = vec![0u32; xs];
    for (s, w) in weights.iter().enumerate() {
        if *w <= T::zero() {
            continue;
        }
        ts.counts_into(s, &mut counts);
        for (o, c) in out.iter_mut().zip(&counts) {
            if *c > 0 {
                *o = *o + *w * T::of_usize(*c as usize) / n;
            }
        }
    }
    out
}

fn excess<T: Scalar>(post: &[T], prior: &[T]) -> T {
    post.iter()
        .zip(prior)
        .map(|(q, p)| (*q - *p).positive_part())
        .sum()
}

impl<T: Scalar> AdaptiveRun<T> {
    pub fn k(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn frame(&self) -> &SampleFrame {
        &self.frame
    }

    pub fn tuple_prior(&self) -> &[T] {
        &self.prior
    }

    pub fn element_prior(&self) -> &FiniteDist<T> {
        &self.element_prior
    }

    pub fn coin_space(&self) -> &Space {
        &self.coin_space
    }

    pub fn response_space(&self, round: usize) -> &Space {
        &self.response_spaces[round]
    }

    /// Prefixes of length `depth`.
    pub fn level(&self, depth: usize) -> &[ViewNode<T>] {
        &self.levels[depth]
    }

    pub fn final_views(&self) -> &[ViewNode<T>] {
        &self.levels[self.k()]
    }

    /// Query the analyst asked after prefix `idx` of level `depth`; `None` at depth k.
    pub fn query_after(&self, depth: usize, idx: usize) -> Option<&str> {
        self.queries_asked[depth][idx].as_deref()
    }

    /// Queries asked along the path to a node, in round order.
    pub fn query_path(&self, depth: usize, idx: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(depth);
        let mut node = &self.levels[depth][idx];
        while let Some(step) = &node.step {
            out.push(step.query.clone());
            node = &self.levels[node.depth() - 1][node.parent.expect("non-root has a parent")];
        }
        out.reverse();
        out
    }

    pub fn view_label(&self, node: &ViewNode<T>) -> String {
        let mut parts = vec![self.coin_space.label(node.coin)];
        for (i, r) in node.responses.iter().enumerate() {
            parts.push(self.response_spaces[i].label(*r));
        }
        parts.join("|")
    }

    pub fn view_space(&self) -> Space {
        Space::labeled(self.final_views().iter().map(|v| self.view_label(v)))
            .expect("view labels are distinct")
    }

    /// `D(v)` over complete views.
    pub fn view_dist(&self) -> FiniteDist<T> {
        FiniteDist::from_parts_unchecked(
            self.view_space(),
            self.final_views().iter().map(|v| v.mass).collect(),
        )
    }

    pub fn total_mass(&self, depth: usize) -> T {
        self.levels[depth].iter().map(|v| v.mass).sum()
    }

    /// `D(·|v)` over tuples.
    pub fn posterior(&self, depth: usize, idx: usize) -> FiniteDist<T> {
        let node = &self.levels[depth][idx];
        FiniteDist::from_parts_unchecked(
            self.frame.tuples().space(),
            node.joint.iter().map(|w| *w / node.mass).collect(),
        )
    }

    /// The whole interaction as one mechanism whose responses are complete views.
    pub fn to_world(&self) -> Result<World<T>> {
        let views = self.final_views();
        let space = self.view_space();
        let mut channel = Channel::new(self.frame.tuples().space(), space);
        for (s, p) in self.prior.iter().enumerate() {
            if *p <= T::zero() {
                continue;
            }
            channel.set_row(s, views.iter().map(|v| v.joint[s] / *p).collect())?;
        }
        World::new(
            self.frame.clone(),
            SamplePrior::Explicit(FiniteDist::from_parts_unchecked(
                self.frame.tuples().space(),
                self.prior.clone(),
            )),
            MechanismKernel::new(channel),
            self.budget,
        )
    }
}

/// Enumerates every positive-mass view of `k` adaptive rounds.
///
/// Round `i` answers the analyst's query with the matching kernel of
/// `rounds[i]`. The world supplies the frame, prior and budget; its own
/// kernel is not used.
pub fn run_adaptive<T: Scalar>(
    world: &World<T>,
    analyst: &Analyst<T>,
    rounds: &[Round<T>],
    k: usize,
) -> Result<AdaptiveRun<T>> {
    if rounds.len() < k {
        return Err(Error::InvalidArguments(format!(
            "{k} rounds requested but only {} are configured",
            rounds.len()
        )));
    }
    let frame = world.frame().clone();
    let ts = *frame.tuples();
    let xs = frame.domain().size();
    let budget = *world.budget();
    for (i, round) in rounds.iter().take(k).enumerate() {
        for (id, kern) in round.queries() {
            if kern.channel().input().len() != ts.count() {
                return Err(Error::DomainMismatch(format!(
                    "round {i} query `{id}` is not over the world's tuples"
                )));
            }
        }
    }
    let prior = world.tuple_weights();
    let element_prior = FiniteDist::from_parts_unchecked(
        frame.domain().space().clone(),
        element_projection(&ts, xs, &prior),
    );

    let coins = analyst.coins();
    let roots: Vec<ViewNode<T>> = coins
        .support()
        .map(|c| {
            let pc = coins.prob(c);
            ViewNode {
                coin: c,
                responses: Vec::new(),
                parent: None,
                mass: pc,
                loss: T::zero(),
                element_posterior: element_prior.clone(),
                step: None,
                joint: prior.iter().map(|p| *p * pc).collect(),
            }
        })
        .collect();
    let mut levels = vec![roots];
    let mut queries_asked = Vec::new();

    for (depth, round) in rounds.iter().take(k).enumerate() {
        let parents = &levels[depth];
        let asked: Vec<String> = parents
            .iter()
            .map(|v| analyst.next_query(v.coin, &v.responses))
            .collect::<Result<_>>()?;
        let expanded: Vec<Vec<ViewNode<T>>> = parents
            .par_iter()
            .zip(asked.par_iter())
            .enumerate()
            .map(|(pi, (parent, qid))| {
                expand(world, &frame, &element_prior, round, parent, pi, qid)
            })
            .collect::<Result<_>>()?;
        let children: Vec<ViewNode<T>> = expanded.into_iter().flatten().collect();
        budget.check("positive-mass views", children.len() as u128, budget.max_views)?;
        budget.check(
            "view posterior table",
            children.len() as u128 * ts.count() as u128,
            budget.max_cells,
        )?;
        queries_asked.push(asked.into_iter().map(Some).collect());
        levels.push(children);
    }
    queries_asked.push(vec![None; levels[k].len()]);

    Ok(AdaptiveRun {
        coin_space: coins.space().clone(),
        budget,
        response_spaces: rounds.iter().take(k).map(|r| r.responses().clone()).collect(),
        frame,
        prior,
        element_prior,
        queries_asked,
        levels,
    })
}

fn expand<T: Scalar>(
    world: &World<T>,
    frame: &SampleFrame,
    element_prior: &FiniteDist<T>,
    round: &Round<T>,
    parent: &ViewNode<T>,
    parent_idx: usize,
    qid: &str,
) -> Result<Vec<ViewNode<T>>> {
    let kernel = round.kernel(qid)?;
    let ts = frame.tuples();
    let xs = frame.domain().size();
    let width = round.responses().len();

    // Step quantities come from inducing the round's kernel under the parent
    // posterior, separately from the forward products below.
    let posterior: Vec<T> = parent.joint.iter().map(|w| *w / parent.mass).collect();
    let local = World::new(
        frame.clone(),
        SamplePrior::Explicit(FiniteDist::from_parts_unchecked(ts.space(), posterior)),
        kernel.clone(),
        *world.budget(),
    )?;
    let ind = induce(&local)?;
    let step_losses = loss_profile(&ind);

    let mut out = Vec::new();
    for r in 0..width {
        let joint: Vec<T> = parent
            .joint
            .iter()
            .enumerate()
            .map(|(s, w)| if w.is_zero() { T::zero() } else { *w * kernel.row(s)[r] })
            .collect();
        let mass: T = joint.iter().copied().sum();
        if mass <= T::zero() {
            continue;
        }
        let elems: Vec<T> = element_projection(ts, xs, &joint)
            .into_iter()
            .map(|w| w / mass)
            .collect();
        let loss = excess(&elems, element_prior.weights());
        let mut responses = parent.responses.clone();
        responses.push(r);
        out.push(ViewNode {
            coin: parent.coin,
            responses,
            parent: Some(parent_idx),
            mass,
            loss,
            element_posterior: FiniteDist::from_parts_unchecked(element_prior.space().clone(), elems),
            step: Some(Step {
                query: qid.to_string(),
                prob: ind.marginal_r().prob(r),
                loss: step_losses.loss(r).unwrap_or_else(T::zero),
            }),
            joint,
        });
    }
    Ok(out)
}

/// Worst deviations from the two view identities over every prefix.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DecompositionReport<T> {
    /// `max |D(v, r) − D(v)·P^{v}(r)|`
    pub product_residual: T,
    /// `max (ℓ(v, r) − ℓ(v) − ℓ_{P^{v}}(r))₊`
    pub loss_violation: T,
    /// Smallest `ℓ(v) + ℓ_step − ℓ(v, r)` seen; how much room the inequality left.
    pub min_slack: Option<T>,
    pub pass: bool,
}

pub fn view_loss_decomposition_check<T: Scalar>(run: &AdaptiveRun<T>) -> DecompositionReport<T> {
    let mut residual = T::zero();
    let mut violation = T::zero();
    let mut min_slack: Option<T> = None;
    for depth in 1..=run.k() {
        let parents = run.level(depth - 1);
        for node in run.level(depth) {
            let parent = &parents[node.parent.expect("non-root has a parent")];
            let step = node.step.as_ref().expect("non-root has a step");
            residual = residual.max_of((node.mass - parent.mass * step.prob).abs());
            let slack = parent.loss + step.loss - node.loss;
            violation = violation.max_of((-slack).positive_part());
            min_slack = Some(min_slack.map_or(slack, |m| m.min_of(slack)));
        }
    }
    let tol = T::tolerance();
    DecompositionReport {
        pass: residual <= tol && violation <= tol,
        product_residual: residual,
        loss_violation: violation,
        min_slack,
    }
}
