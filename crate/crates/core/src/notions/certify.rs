use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{excess_mass, maximal_leakage, JointDist};
use crate::scalar::{Real, Scalar};
use crate::stability::lss_certify;
use crate::world::{induce, InducedDistributions, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Notion {
    Dp,
    Mi,
    Lmi,
    Ts,
    Ml,
    Lml,
    Lss,
}

impl Notion {
    pub fn name(self) -> &'static str {
        match self {
            Notion::Dp => "DP",
            Notion::Mi => "MI",
            Notion::Lmi => "LMI",
            Notion::Ts => "TS",
            Notion::Ml => "ML",
            Notion::Lml => "LML",
            Notion::Lss => "LSS",
        }
    }
}

/// Which side of an indistinguishability check carries the excess.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `joint(B) > e^ε·product(B) + δ`
    JointOverProduct,
    /// `product(B) > e^ε·joint(B) + δ`
    ProductOverJoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    None,
    /// Tuple indices of the worst (or first violating) pair.
    Pair { first: usize, second: usize },
    /// Cells `(left, right)` of the worst subset of a joint table.
    Cells { direction: Direction, cells: Vec<(usize, usize)> },
    /// Unstable responses.
    Responses(Vec<usize>),
}

impl Witness {
    pub fn size(&self) -> usize {
        match self {
            Witness::None => 0,
            Witness::Pair { .. } => 2,
            Witness::Cells { cells, .. } => cells.len(),
            Witness::Responses(r) => r.len(),
        }
    }
}

/// Minimal certified parameters of one notion on one world.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NotionCertificate<T> {
    pub notion: Notion,
    pub eps: Option<T>,
    /// The fixed δ a TS certificate was computed for.
    pub delta: Option<T>,
    pub delta_star: Option<T>,
    pub eta_star: Option<T>,
    pub leakage: Option<T>,
    pub witness: Witness,
}

impl<T> NotionCertificate<T> {
    fn with_delta(notion: Notion, eps: T, delta_star: T, witness: Witness) -> Self {
        Self {
            notion,
            eps: Some(eps),
            delta: None,
            delta_star: Some(delta_star),
            eta_star: None,
            leakage: None,
            witness,
        }
    }

    fn with_leakage(notion: Notion, leakage: T) -> Self {
        Self {
            notion,
            eps: None,
            delta: None,
            delta_star: None,
            eta_star: None,
            leakage: Some(leakage),
            witness: Witness::None,
        }
    }
}

fn check_ratio<T: Scalar>(ratio: T) -> Result<()> {
    if ratio < T::one() {
        return Err(Error::InvalidArguments(format!(
            "likelihood ratio {ratio} is below 1 (negative ε)"
        )));
    }
    Ok(())
}

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if eps < T::zero() || eps.is_nan() {
        return Err(Error::InvalidArguments(format!("ε = {eps} is negative")));
    }
    Ok(())
}

fn require_all_rows<T: Scalar>(world: &World<T>) -> Result<()> {
    let k = world.kernel();
    if let Some(s) = (0..world.frame().tuples().count()).find(|&s| !k.has_row(s)) {
        return Err(Error::Precondition(format!(
            "kernel has no row for tuple {}",
            world.frame().tuple_label(s)
        )));
    }
    Ok(())
}

/// Largest one-sided excess over neighbouring tuple pairs, scaled by `ratio = e^ε`.
pub fn dp_certify_ratio<T: Scalar>(world: &World<T>, ratio: T) -> Result<(T, Option<(usize, usize)>)> {
    check_ratio(ratio)?;
    require_all_rows(world)?;
    let ts = *world.frame().tuples();
    let budget = world.budget();
    let pairs = ts.count() as u128 * ts.n() as u128 * (ts.base() as u128).saturating_sub(1);
    budget.check("neighbouring tuple pairs", pairs, budget.max_pairs)?;
    let kernel = world.kernel();
    let best = (0..ts.count())
        .into_par_iter()
        .map(|s1| {
            let digits = ts.decode(s1);
            let mut best: (T, Option<(usize, usize)>) = (T::zero(), None);
            for (pos, &d) in digits.iter().enumerate() {
                let place = ts.place_value(pos);
                for x in 0..ts.base() {
                    if x == d {
                        continue;
                    }
                    let s2 = s1 - d * place + x * place;
                    let v = excess_mass(kernel.row(s1), kernel.row(s2), ratio);
                    if v > best.0 {
                        best = (v, Some((s1, s2)));
                    }
                }
            }
            best
        })
        .reduce(|| (T::zero(), None), pick_worse);
    Ok(best)
}

/// Larger value wins; ties go to the lexicographically smaller pair.
fn pick_worse<T: Scalar>(
    a: (T, Option<(usize, usize)>),
    b: (T, Option<(usize, usize)>),
) -> (T, Option<(usize, usize)>) {
    match (a.1, b.1) {
        (None, _) => b,
        (_, None) => a,
        (Some(pa), Some(pb)) => {
            if b.0 > a.0 || (b.0 == a.0 && pb < pa) {
                b
            } else {
                a
            }
        }
    }
}

/// Minimal δ such that the mechanism is (ε, δ)-DP.
pub fn dp_certify<T: Real>(world: &World<T>, eps: T) -> Result<NotionCertificate<T>> {
    check_eps(eps)?;
    let (delta, pair) = dp_certify_ratio(world, eps.exp())?;
    let witness = match pair {
        Some((first, second)) => Witness::Pair { first, second },
        None => Witness::None,
    };
    Ok(NotionCertificate::with_delta(Notion::Dp, eps, delta, witness))
}

/// Two-sided excess between `a` and `b` over the same table, with the worse side's cells.
pub(crate) fn joint_excess<T: Scalar>(a: &JointDist<T>, b: &JointDist<T>, ratio: T) -> (T, Witness) {
    let fwd = excess_mass(a.weights(), b.weights(), ratio);
    let back = excess_mass(b.weights(), a.weights(), ratio);
    let (value, direction, p, q) = if back > fwd {
        (back, Direction::ProductOverJoint, b.weights(), a.weights())
    } else {
        (fwd, Direction::JointOverProduct, a.weights(), b.weights())
    };
    if value <= T::zero() {
        return (T::zero(), Witness::None);
    }
    let width = a.right().len();
    let cells = p
        .iter()
        .zip(q)
        .enumerate()
        .filter(|(_, (x, y))| **x > ratio * **y)
        .map(|(i, _)| (i / width, i % width))
        .collect();
    (value, Witness::Cells { direction, cells })
}

pub fn mi_certify_ratio<T: Scalar>(ind: &InducedDistributions<T>, ratio: T) -> Result<(T, Witness)> {
    check_ratio(ratio)?;
    let sets = ind.sets().ok_or_else(|| {
        Error::Unsupported("max information needs the enumerated set-level joint".into())
    })?;
    Ok(joint_excess(sets.joint(), &sets.product(), ratio))
}

/// Minimal δ for δ-approximate max-information ε: set-level joint vs product.
pub fn mi_certify<T: Real>(world: &World<T>, eps: T) -> Result<NotionCertificate<T>> {
    mi_certify_induced(&induce(world)?, eps)
}

pub fn mi_certify_induced<T: Real>(ind: &InducedDistributions<T>, eps: T) -> Result<NotionCertificate<T>> {
    check_eps(eps)?;
    let (delta, witness) = mi_certify_ratio(ind, eps.exp())?;
    Ok(NotionCertificate::with_delta(Notion::Mi, eps, delta, witness))
}

pub fn lmi_certify_ratio<T: Scalar>(ind: &InducedDistributions<T>, ratio: T) -> Result<(T, Witness)> {
    check_ratio(ratio)?;
    Ok(joint_excess(ind.joint_elems(), ind.product_elems(), ratio))
}

/// Minimal δ for (ε, δ)-LMI: element-level joint vs product.
pub fn lmi_certify<T: Real>(world: &World<T>, eps: T) -> Result<NotionCertificate<T>> {
    lmi_certify_induced(&induce(world)?, eps)
}

/// Also accepts the closed-form element-release distributions.
pub fn lmi_certify_induced<T: Real>(ind: &InducedDistributions<T>, eps: T) -> Result<NotionCertificate<T>> {
    check_eps(eps)?;
    let (delta, witness) = lmi_certify_ratio(ind, eps.exp())?;
    Ok(NotionCertificate::with_delta(Notion::Lmi, eps, delta, witness))
}

/// Probability over independent `S₁, S₂` that the rows violate (ε, δ) one-sidedly.
pub fn ts_certify_ratio<T: Scalar>(world: &World<T>, ratio: T, delta: T) -> Result<(T, Option<(usize, usize)>)> {
    check_ratio(ratio)?;
    let ts = world.frame().tuples();
    let budget = world.budget();
    budget.check(
        "tuple pairs",
        ts.count() as u128 * ts.count() as u128,
        budget.max_pairs,
    )?;
    let prior = world.tuple_weights();
    let support: Vec<usize> = (0..prior.len()).filter(|&s| prior[s] > T::zero()).collect();
    let kernel = world.kernel();
    let limit = delta + T::tolerance();
    let per_row: Vec<(T, Option<(usize, usize)>)> = support
        .par_iter()
        .map(|&s1| {
            let mut mass = T::zero();
            let mut first = None;
            for &s2 in &support {
                if excess_mass(kernel.row(s1), kernel.row(s2), ratio) > limit {
                    mass = mass + prior[s2];
                    first.get_or_insert((s1, s2));
                }
            }
            (prior[s1] * mass, first)
        })
        .collect();
    let eta = per_row.iter().map(|(m, _)| *m).sum();
    let witness = per_row.iter().find_map(|(_, w)| *w);
    Ok((eta, witness))
}

/// Minimal η for (ε, δ, η)-typical stability, in the pair-probability form.
pub fn ts_certify<T: Real>(world: &World<T>, eps: T, delta: T) -> Result<NotionCertificate<T>> {
    check_eps(eps)?;
    if delta < T::zero() || delta > T::one() {
        return Err(Error::InvalidArguments(format!("δ = {delta} outside [0, 1]")));
    }
    let (eta, pair) = ts_certify_ratio(world, eps.exp(), delta)?;
    Ok(NotionCertificate {
        notion: Notion::Ts,
        eps: Some(eps),
        delta: Some(delta),
        delta_star: None,
        eta_star: Some(eta),
        leakage: None,
        witness: pair.map_or(Witness::None, |(first, second)| Witness::Pair { first, second }),
    })
}

/// Maximal leakage from the prior over tuples to the response.
pub fn ml_certify<T: Real>(world: &World<T>) -> Result<NotionCertificate<T>> {
    ml_certify_induced(&induce(world)?)
}

pub fn ml_certify_induced<T: Real>(ind: &InducedDistributions<T>) -> Result<NotionCertificate<T>> {
    let sets = ind
        .sets()
        .ok_or_else(|| Error::Unsupported("maximal leakage needs the set-level joint".into()))?;
    Ok(NotionCertificate::with_leakage(Notion::Ml, maximal_leakage(sets.joint())?))
}

/// Maximal leakage from a single sample element to the response.
pub fn lml_certify<T: Real>(world: &World<T>) -> Result<NotionCertificate<T>> {
    lml_certify_induced(&induce(world)?)
}

pub fn lml_certify_induced<T: Real>(ind: &InducedDistributions<T>) -> Result<NotionCertificate<T>> {
    Ok(NotionCertificate::with_leakage(
        Notion::Lml,
        maximal_leakage(ind.joint_elems())?,
    ))
}

/// LSS as a [`NotionCertificate`].
pub fn lss_notion_certify<T: Scalar>(ind: &InducedDistributions<T>, eps: T) -> Result<NotionCertificate<T>> {
    let c = lss_certify(ind, eps)?;
    Ok(NotionCertificate::with_delta(
        Notion::Lss,
        eps,
        c.delta_star,
        if c.witness.is_empty() {
            Witness::None
        } else {
            Witness::Responses(c.witness)
        },
    ))
}
