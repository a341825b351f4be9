use rayon::prelude::*;
use serde::Serialize;

use super::analyst::{Analyst, Round};
use super::run::run_adaptive;
use crate::error::{Error, Result};
use crate::prob::FiniteDist;
use crate::scalar::{Real, Scalar};
use crate::stability::{loss_profile, lss_certify, LossProfile};
use crate::world::{induce, InducedDistributions, SamplePrior, World};

/// `(Σε_i, Σδ_i)`
pub fn linear_composition_bound<T: Scalar>(per_round: &[(T, T)]) -> Result<(T, T)> {
    if per_round.is_empty() {
        return Err(Error::InvalidArguments("no rounds to compose".into()));
    }
    let unit = |v: T| v >= T::zero() && v <= T::one();
    if let Some(i) = per_round.iter().position(|(e, d)| !unit(*e) || !unit(*d)) {
        return Err(Error::InvalidArguments(format!(
            "round {i} parameters ({}, {}) are outside [0, 1]",
            per_round[i].0, per_round[i].1
        )));
    }
    Ok(per_round
        .iter()
        .fold((T::zero(), T::zero()), |(e, d), (ei, di)| (e + *ei, d + *di)))
}

/// `(√(8 ln(1/δ′) Σε_i²) + Σα_i, δ′ + Σ δ_i/ε_i)` for rounds `(ε_i, δ_i, α_i)`.
pub fn advanced_composition_bound<T: Real>(per_round: &[(T, T, T)], delta_prime: T) -> Result<(T, T)> {
    if per_round.is_empty() {
        return Err(Error::InvalidArguments("no rounds to compose".into()));
    }
    if !(delta_prime > T::zero() && delta_prime <= T::one()) {
        return Err(Error::InvalidArguments(format!(
            "δ′ = {delta_prime} must lie in (0, 1]"
        )));
    }
    if let Some(i) = per_round.iter().position(|(e, _, _)| !(*e > T::zero())) {
        return Err(Error::InvalidArguments(format!(
            "round {i} has ε = {}, which must be positive",
            per_round[i].0
        )));
    }
    let sq: T = per_round.iter().map(|(e, _, _)| *e * *e).sum();
    let alphas: T = per_round.iter().map(|(_, _, a)| *a).sum();
    let ratio: T = per_round.iter().map(|(e, d, _)| *d / *e).sum();
    let eight = T::of_usize(8);
    let eps = (eight * (T::one() / delta_prime).ln() * sq).sqrt() + alphas;
    Ok((eps, delta_prime + ratio))
}

/// Worst case of one round over every reachable posterior and every query.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundCertificate<T> {
    pub round: usize,
    pub eps: T,
    /// `max δ*(ε_i)` over the family and the round's queries.
    pub delta_star: T,
    /// `max E[ℓ(R)]` over the same pairs.
    pub expected_loss: T,
    /// Number of posteriors the round was checked against.
    pub family_size: usize,
}

fn expected_loss<T: Scalar>(ind: &InducedDistributions<T>, profile: &LossProfile<T>) -> T {
    ind.marginal_r()
        .weights()
        .iter()
        .zip(&profile.per_response)
        .map(|(p, l)| l.map_or(T::zero(), |l| *p * l))
        .sum()
}

/// Certifies round `i` at `eps[i]` against every posterior reachable through
/// any query sequence of the earlier rounds.
pub fn certify_rounds<T: Scalar>(world: &World<T>, rounds: &[Round<T>], eps: &[T]) -> Result<Vec<RoundCertificate<T>>> {
    if eps.len() > rounds.len() {
        return Err(Error::InvalidArguments(format!(
            "{} round parameters for {} rounds",
            eps.len(),
            rounds.len()
        )));
    }
    let frame = world.frame();
    let space = frame.tuples().space();
    let budget = *world.budget();
    let mut family = vec![world.tuple_weights()];
    let mut out = Vec::with_capacity(eps.len());
    for (i, (round, e)) in rounds.iter().zip(eps).enumerate() {
        let last = i + 1 == eps.len();
        type Item<T> = (T, T, Vec<Vec<T>>);
        let per_member: Vec<Vec<Item<T>>> = family
            .par_iter()
            .map(|post| {
                round
                    .queries()
                    .map(|(_, kernel)| {
                        let local = World::new(
                            frame.clone(),
                            SamplePrior::Explicit(FiniteDist::from_parts_unchecked(space.clone(), post.clone())),
                            kernel.clone(),
                            budget,
                        )?;
                        let ind = induce(&local)?;
                        let profile = loss_profile(&ind);
                        let cert = lss_certify(&ind, *e)?;
                        let next = if last {
                            Vec::new()
                        } else {
                            (0..ind.responses().len())
                                .filter_map(|r| ind.posterior_sets(r))
                                .map(|d| d.weights().to_vec())
                                .collect()
                        };
                        Ok((cert.delta_star, expected_loss(&ind, &profile), next))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut delta = T::zero();
        let mut alpha = T::zero();
        let mut next_family = Vec::new();
        for (d, a, next) in per_member.into_iter().flatten() {
            delta = delta.max_of(d);
            alpha = alpha.max_of(a);
            next_family.extend(next);
        }
        out.push(RoundCertificate {
            round: i,
            eps: *e,
            delta_star: delta,
            expected_loss: alpha,
            family_size: family.len(),
        });
        budget.check("reachable posterior family", next_family.len() as u128, budget.max_views)?;
        family = next_family;
    }
    Ok(out)
}

/// Bound against measurement for a composed interaction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositionReport<T> {
    pub rounds: Vec<RoundCertificate<T>>,
    pub bound_eps: T,
    pub bound_delta: T,
    /// `δ*(bound_eps)` of the whole interaction treated as one mechanism.
    pub measured_delta_star: T,
    /// `D({v : ℓ(v) > bound_eps})`
    pub unstable_mass: T,
    pub pass: bool,
}

fn measure<T: Scalar>(
    world: &World<T>,
    analyst: &Analyst<T>,
    rounds: &[Round<T>],
    k: usize,
    eps: T,
) -> Result<(T, T)> {
    let run = run_adaptive(world, analyst, rounds, k)?;
    let whole = run.to_world()?;
    let ind = induce(&whole)?;
    let cert = lss_certify(&ind, eps)?;
    let unstable = run
        .final_views()
        .iter()
        .filter(|v| v.loss > eps)
        .map(|v| v.mass)
        .sum();
    Ok((cert.delta_star, unstable))
}

/// Certifies each round against its reachable posteriors, then checks the
/// whole run at `Σε_i` against `Σδ_i`.
pub fn linear_composition_check<T: Scalar>(
    world: &World<T>,
    analyst: &Analyst<T>,
    rounds: &[Round<T>],
    eps: &[T],
) -> Result<CompositionReport<T>> {
    let certs = certify_rounds(world, rounds, eps)?;
    let pairs: Vec<(T, T)> = certs.iter().map(|c| (c.eps, c.delta_star)).collect();
    let (bound_eps, bound_delta) = linear_composition_bound(&pairs)?;
    let (measured, unstable) = measure(world, analyst, rounds, eps.len(), bound_eps)?;
    Ok(CompositionReport {
        rounds: certs,
        bound_eps,
        bound_delta,
        pass: measured <= bound_delta + T::tolerance(),
        measured_delta_star: measured,
        unstable_mass: unstable,
    })
}

/// The sub-linear bound with `α_i` taken as the certified worst expected loss.
pub fn advanced_composition_check<T: Real>(
    world: &World<T>,
    analyst: &Analyst<T>,
    rounds: &[Round<T>],
    eps: &[T],
    delta_prime: T,
) -> Result<CompositionReport<T>> {
    let certs = certify_rounds(world, rounds, eps)?;
    let triples: Vec<(T, T, T)> = certs
        .iter()
        .map(|c| (c.eps, c.delta_star, c.expected_loss))
        .collect();
    let (bound_eps, bound_delta) = advanced_composition_bound(&triples, delta_prime)?;
    let (measured, unstable) = measure(world, analyst, rounds, eps.len(), bound_eps)?;
    Ok(CompositionReport {
        rounds: certs,
        bound_eps,
        bound_delta,
        pass: measured <= bound_delta + T::tolerance(),
        measured_delta_star: measured,
        unstable_mass: unstable,
    })
}
