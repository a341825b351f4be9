//! Stability loss of responses and local statistical stability certificates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::half_l1;
use crate::scalar::Scalar;
use crate::world::InducedDistributions;

/// Per-response stability loss and the elements whose probability rose.
#[derive(Clone, Debug, PartialEq)]
pub struct LossProfile<T> {
    /// `ℓ(r)`, or `None` when `D(r) = 0`.
    pub per_response: Vec<Option<T>>,
    /// `X₊(r)`: elements with posterior strictly above prior.
    pub positive_sets: Vec<Vec<usize>>,
}

impl<T: Scalar> LossProfile<T> {
    pub fn loss(&self, r: usize) -> Option<T> {
        self.per_response[r]
    }
}

/// `ℓ(r) = Σ_{x ∈ X₊(r)} (D(x|r) − D(x))` for every response.
pub fn loss_profile<T: Scalar>(ind: &InducedDistributions<T>) -> LossProfile<T> {
    let prior = ind.element_marginal().weights();
    let per: Vec<(Option<T>, Vec<usize>)> = (0..ind.responses().len())
        .into_par_iter()
        .map(|r| match ind.posterior_elems(r) {
            None => (None, Vec::new()),
            Some(post) => {
                let mut loss = T::zero();
                let mut plus = Vec::new();
                for (x, (q, p)) in post.weights().iter().zip(prior).enumerate() {
                    if *q > *p {
                        loss = loss + (*q - *p);
                        plus.push(x);
                    }
                }
                (Some(loss), plus)
            }
        })
        .collect();
    let (per_response, positive_sets) = per.into_iter().unzip();
    LossProfile {
        per_response,
        positive_sets,
    }
}

/// Loss of each response measured as statistical distance to the prior.
///
/// Independent route to [`loss_profile`], used for cross-checks.
pub fn loss_as_distance<T: Scalar>(ind: &InducedDistributions<T>, r: usize) -> Option<T> {
    ind.posterior_elems(r)
        .map(|post| half_l1(post.weights(), ind.element_marginal().weights()))
}

/// `ℓ(R') = Σ_{r∈R'} D(r)·ℓ(r) / D(R')` over the positive-mass members of `subset`.
pub fn set_loss<T: Scalar>(profile: &LossProfile<T>, marginal_r: &[T], subset: &[usize]) -> Result<T> {
    let mut mass = T::zero();
    let mut weighted = T::zero();
    for &r in subset {
        if let Some(l) = profile.per_response[r] {
            if marginal_r[r] > T::zero() {
                mass = mass + marginal_r[r];
                weighted = weighted + marginal_r[r] * l;
            }
        }
    }
    if mass <= T::zero() {
        return Err(Error::UndefinedAverage);
    }
    Ok(weighted / mass)
}

/// Minimal δ for which a world is (ε, δ)-LSS, with the witness set `R_ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LssCertificate<T> {
    pub eps: T,
    pub delta_star: T,
    /// `R_ε`: positive-mass responses with `ℓ(r) > ε`, in response order.
    pub witness: Vec<usize>,
    /// `D(R_ε)`
    pub witness_mass: T,
    /// `ℓ(R_ε)`, zero when the witness is empty.
    pub witness_loss: T,
}

impl<T: Scalar> LssCertificate<T> {
    /// Whether the world is (ε, δ)-LSS at this certificate's ε.
    pub fn holds(&self, delta: T) -> bool {
        self.delta_star <= delta + T::tolerance()
    }
}

pub fn lss_certify_profile<T: Scalar>(profile: &LossProfile<T>, marginal_r: &[T], eps: T) -> Result<LssCertificate<T>> {
    if eps < T::zero() {
        return Err(Error::InvalidArguments(format!("ε = {eps} is negative")));
    }
    let witness: Vec<usize> = profile
        .per_response
        .iter()
        .enumerate()
        .filter(|(r, l)| marginal_r[*r] > T::zero() && matches!(l, Some(l) if *l > eps))
        .map(|(r, _)| r)
        .collect();
    let witness_mass: T = witness.iter().map(|&r| marginal_r[r]).sum();
    let (delta_star, witness_loss) = if witness.is_empty() {
        (T::zero(), T::zero())
    } else {
        let loss = set_loss(profile, marginal_r, &witness)?;
        // Summing D(r)(ℓ(r) − ε) term by term is exact for rationals and
        // avoids the division inside ℓ(R_ε) for floats.
        let excess: T = witness
            .iter()
            .map(|&r| marginal_r[r] * (profile.per_response[r].unwrap_or_else(T::zero) - eps))
            .sum();
        (excess.positive_part(), loss)
    };
    Ok(LssCertificate {
        eps,
        delta_star,
        witness,
        witness_mass,
        witness_loss,
    })
}

/// Minimal δ such that `D(R')·(ℓ(R') − ε) ≤ δ` for every response subset `R'`.
///
/// ε above 1 is accepted (the answer is then 0) so that summed composition
/// parameters can be certified directly.
pub fn lss_certify<T: Scalar>(ind: &InducedDistributions<T>, eps: T) -> Result<LssCertificate<T>> {
    let profile = loss_profile(ind);
    lss_certify_profile(&profile, ind.marginal_r().weights(), eps)
}

/// Outcome of checking `D(R_2ε) < δ/ε` on a world.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnstableMassReport<T> {
    pub eps: T,
    pub delta: T,
    /// `D(R_2ε)`
    pub mass: T,
    /// `δ/ε`
    pub bound: T,
    /// Whether the world is (ε, δ)-LSS in the first place.
    pub certified: bool,
    pub pass: bool,
}

/// Measures `D(R_2ε)` and compares it to `δ/ε`.
///
/// The bound is only claimed for worlds that are (ε, δ)-LSS, so `pass` is
/// vacuously true when the certificate does not hold.
pub fn unstable_mass_bound_check<T: Scalar>(
    ind: &InducedDistributions<T>,
    eps: T,
    delta: T,
) -> Result<UnstableMassReport<T>> {
    if eps <= T::zero() {
        return Err(Error::InvalidArguments("ε must be positive".into()));
    }
    if delta > eps {
        return Err(Error::InvalidArguments(format!(
            "requires δ ≤ ε, got δ = {delta}, ε = {eps}"
        )));
    }
    let profile = loss_profile(ind);
    let marginal = ind.marginal_r().weights();
    let certified = lss_certify_profile(&profile, marginal, eps)?.holds(delta);
    let two_eps = eps + eps;
    let mass: T = profile
        .per_response
        .iter()
        .enumerate()
        .filter(|(r, l)| marginal[*r] > T::zero() && matches!(l, Some(l) if *l > two_eps))
        .map(|(r, _)| marginal[r])
        .sum();
    let bound = delta / eps;
    let pass = !certified || mass < bound + T::tolerance();
    Ok(UnstableMassReport {
        eps,
        delta,
        mass,
        bound,
        certified,
        pass,
    })
}
