use rayon::prelude::*;

use super::{Domain, SampleFrame, SamplePrior, World};
use crate::error::{Error, Result};
use crate::prob::{FiniteDist, JointDist, Space};
use crate::scalar::Scalar;

const CHUNK: usize = 2048;

/// Joint of sample tuples and responses, kept when it was enumerated.
#[derive(Clone, Debug, PartialEq)]
pub struct SetLevel<T> {
    prior: FiniteDist<T>,
    joint: JointDist<T>,
}

impl<T: Scalar> SetLevel<T> {
    pub fn prior(&self) -> &FiniteDist<T> {
        &self.prior
    }

    /// `D(s, r) = D(s)·K(s, r)`.
    pub fn joint(&self) -> &JointDist<T> {
        &self.joint
    }

    /// `D(s)·D(r)` over the same table.
    pub fn product(&self) -> JointDist<T> {
        JointDist::product(&self.prior, &self.joint.right_marginal())
    }

    /// Posterior over tuples after seeing `r`; `None` when `D(r) = 0`.
    pub fn posterior(&self, r: usize) -> Option<FiniteDist<T>> {
        let width = self.joint.right().len();
        let column: Vec<T> = (0..self.prior.len())
            .map(|s| self.joint.weights()[s * width + r])
            .collect();
        let total: T = column.iter().copied().sum();
        if total <= T::zero() {
            return None;
        }
        Some(FiniteDist::from_parts_unchecked(
            self.prior.space().clone(),
            column.into_iter().map(|w| w / total).collect(),
        ))
    }
}

/// Every distribution a world induces over tuples, elements and responses.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedDistributions<T> {
    sets: Option<SetLevel<T>>,
    marginal_r: FiniteDist<T>,
    element_marginal: FiniteDist<T>,
    joint_elems: JointDist<T>,
    product_elems: JointDist<T>,
    posterior_elems: Vec<Option<FiniteDist<T>>>,
    response_given_elem: Vec<Option<FiniteDist<T>>>,
}

impl<T: Scalar> InducedDistributions<T> {
    /// Set-level tables; absent for analytic fast paths.
    pub fn sets(&self) -> Option<&SetLevel<T>> {
        self.sets.as_ref()
    }

    pub fn domain(&self) -> &Space {
        self.element_marginal.space()
    }

    pub fn responses(&self) -> &Space {
        self.marginal_r.space()
    }

    pub fn marginal_r(&self) -> &FiniteDist<T> {
        &self.marginal_r
    }

    pub fn element_marginal(&self) -> &FiniteDist<T> {
        &self.element_marginal
    }

    pub fn joint_elems(&self) -> &JointDist<T> {
        &self.joint_elems
    }

    pub fn product_elems(&self) -> &JointDist<T> {
        &self.product_elems
    }

    /// `D(·|r)` over elements; `None` when `D(r) = 0`.
    pub fn posterior_elems(&self, r: usize) -> Option<&FiniteDist<T>> {
        self.posterior_elems[r].as_ref()
    }

    /// `D(·|x)` over responses; `None` when `D(x) = 0`.
    pub fn response_given_elem(&self, x: usize) -> Option<&FiniteDist<T>> {
        self.response_given_elem[x].as_ref()
    }

    pub fn posterior_sets(&self, r: usize) -> Option<FiniteDist<T>> {
        self.sets.as_ref().and_then(|s| s.posterior(r))
    }
}

struct PassOne<T> {
    marginal_r: Vec<T>,
    joint_elems: Vec<T>,
    element_marginal: Vec<T>,
}

struct PassTwo<T> {
    posterior: Vec<T>,
    conditional: Vec<T>,
}

fn add_into<T: Scalar>(acc: &mut [T], part: &[T]) {
    for (a, b) in acc.iter_mut().zip(part) {
        *a = *a + *b;
    }
}

/// Enumerates the world and computes all induced distributions.
///
/// Work is split into fixed-size tuple chunks whose partial sums are combined
/// in chunk order, so results do not depend on the thread count.
pub fn induce<T: Scalar>(world: &World<T>) -> Result<InducedDistributions<T>> {
    let frame = world.frame();
    let ts = *frame.tuples();
    let budget = world.budget();
    let responses = world.kernel().responses().clone();
    let width = responses.len();
    let xs = frame.domain().size();
    let n_s = T::of_usize(frame.n());
    budget.check(
        "joint table over tuples and responses",
        ts.count() as u128 * width as u128,
        budget.max_cells,
    )?;
    let prior = world.tuple_weights();
    let kernel = world.kernel();

    let mut joint_sets = vec![T::zero(); ts.count() * width];
    let parts: Vec<PassOne<T>> = joint_sets
        .par_chunks_mut(CHUNK * width)
        .enumerate()
        .map(|(ci, slab)| {
            let mut acc = PassOne {
                marginal_r: vec![T::zero(); width],
                joint_elems: vec![T::zero(); xs * width],
                element_marginal: vec![T::zero(); xs],
            };
            let mut counts = vec![0u32; xs];
            for (off, cells) in slab.chunks_mut(width).enumerate() {
                let s = ci * CHUNK + off;
                let ps = prior[s];
                if ps <= T::zero() {
                    continue;
                }
                ts.counts_into(s, &mut counts);
                for (cell, k) in cells.iter_mut().zip(kernel.row(s)) {
                    *cell = ps * *k;
                }
                add_into(&mut acc.marginal_r, cells);
                for (x, &c) in counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let share = T::of_usize(c as usize) / n_s;
                    acc.element_marginal[x] = acc.element_marginal[x] + ps * share;
                    let row = &mut acc.joint_elems[x * width..(x + 1) * width];
                    for (j, cell) in row.iter_mut().zip(cells.iter()) {
                        *j = *j + *cell * share;
                    }
                }
            }
            acc
        })
        .collect();

    let mut marginal_r = vec![T::zero(); width];
    let mut joint_elems = vec![T::zero(); xs * width];
    let mut element_marginal = vec![T::zero(); xs];
    for p in &parts {
        add_into(&mut marginal_r, &p.marginal_r);
        add_into(&mut joint_elems, &p.joint_elems);
        add_into(&mut element_marginal, &p.element_marginal);
    }

    // Second pass: the posterior route divides each tuple's joint mass by D(r)
    // before counting, and the conditional route weights kernel rows by P(s|x).
    let parts: Vec<PassTwo<T>> = joint_sets
        .par_chunks(CHUNK * width)
        .enumerate()
        .map(|(ci, slab)| {
            let mut acc = PassTwo {
                posterior: vec![T::zero(); width * xs],
                conditional: vec![T::zero(); xs * width],
            };
            let mut counts = vec![0u32; xs];
            for (off, cells) in slab.chunks(width).enumerate() {
                let s = ci * CHUNK + off;
                let ps = prior[s];
                if ps <= T::zero() {
                    continue;
                }
                ts.counts_into(s, &mut counts);
                for (x, &c) in counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let share = T::of_usize(c as usize) / n_s;
                    for r in 0..width {
                        if marginal_r[r] > T::zero() && !cells[r].is_zero() {
                            let post = cells[r] / marginal_r[r];
                            acc.posterior[r * xs + x] = acc.posterior[r * xs + x] + post * share;
                        }
                    }
                    let given_x = ps * share / element_marginal[x];
                    let row = &mut acc.conditional[x * width..(x + 1) * width];
                    for (cell, k) in row.iter_mut().zip(kernel.row(s)) {
                        *cell = *cell + given_x * *k;
                    }
                }
            }
            acc
        })
        .collect();

    let mut posterior = vec![T::zero(); width * xs];
    let mut conditional = vec![T::zero(); xs * width];
    for p in &parts {
        add_into(&mut posterior, &p.posterior);
        add_into(&mut conditional, &p.conditional);
    }

    let domain = frame.domain().space().clone();
    let posterior_elems = (0..width)
        .map(|r| {
            (marginal_r[r] > T::zero()).then(|| {
                FiniteDist::from_parts_unchecked(
                    domain.clone(),
                    posterior[r * xs..(r + 1) * xs].to_vec(),
                )
            })
        })
        .collect();
    let response_given_elem = (0..xs)
        .map(|x| {
            (element_marginal[x] > T::zero()).then(|| {
                FiniteDist::from_parts_unchecked(
                    responses.clone(),
                    conditional[x * width..(x + 1) * width].to_vec(),
                )
            })
        })
        .collect();

    let marginal_r = FiniteDist::from_parts_unchecked(responses.clone(), marginal_r);
    let element_marginal = FiniteDist::from_parts_unchecked(domain.clone(), element_marginal);
    let product_elems = JointDist::product(&element_marginal, &marginal_r);
    let tuple_space = ts.space();
    Ok(InducedDistributions {
        sets: Some(SetLevel {
            prior: FiniteDist::from_parts_unchecked(tuple_space.clone(), prior),
            joint: JointDist::from_parts_unchecked(tuple_space, responses, joint_sets),
        }),
        marginal_r,
        element_marginal,
        joint_elems: JointDist::from_parts_unchecked(domain, world.kernel().responses().clone(), joint_elems),
        product_elems,
        posterior_elems,
        response_given_elem,
    })
}

/// Closed-form element-level distributions of the mechanism that releases
/// one uniformly chosen sample element, under an iid prior.
///
/// The response space is the domain itself.
pub fn element_release_analytic<T: Scalar>(
    domain: &Domain,
    element_dist: &FiniteDist<T>,
    n: usize,
) -> Result<InducedDistributions<T>> {
    if n == 0 {
        return Err(Error::InvalidArguments("sample size must be positive".into()));
    }
    if element_dist.space() != domain.space() {
        return Err(Error::DomainMismatch(
            "element distribution is not over the domain".into(),
        ));
    }
    let m = domain.size();
    let inv_n = T::one() / T::of_usize(n);
    let keep = T::one() - inv_n;
    let p = element_dist.weights();
    let mut joint = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let diag = if a == b { p[a] * inv_n } else { T::zero() };
            joint.push(keep * p[a] * p[b] + diag);
        }
    }
    // Conditionals straight from the sampling story: with probability 1/n the
    // released position is the one holding the conditioning element.
    let cond = |given: usize| -> FiniteDist<T> {
        let w = (0..m)
            .map(|o| keep * p[o] + if o == given { inv_n } else { T::zero() })
            .collect();
        FiniteDist::from_parts_unchecked(domain.space().clone(), w)
    };
    let positive: Vec<Option<FiniteDist<T>>> = (0..m)
        .map(|i| (p[i] > T::zero()).then(|| cond(i)))
        .collect();
    let space = domain.space().clone();
    Ok(InducedDistributions {
        sets: None,
        marginal_r: element_dist.clone(),
        element_marginal: element_dist.clone(),
        joint_elems: JointDist::from_parts_unchecked(space.clone(), space, joint),
        product_elems: JointDist::product(element_dist, element_dist),
        posterior_elems: positive.clone(),
        response_given_elem: positive,
    })
}

/// [`element_release_analytic`] for a prior given in either form; only
/// product priors are supported.
pub fn element_release_analytic_prior<T: Scalar>(
    frame: &SampleFrame,
    prior: &SamplePrior<T>,
) -> Result<InducedDistributions<T>> {
    match prior {
        SamplePrior::Product(d) => element_release_analytic(frame.domain(), d, frame.n()),
        SamplePrior::Explicit(_) => Err(Error::Unsupported(
            "closed-form element release requires a product prior".into(),
        )),
    }
}

/// Largest residual of the Bayes factorizations
/// `D(x, r) = D(r)·D(x|r) = D(x)·D(r|x)` and of `Σ_r D(x, r) = D(x)`.
pub fn bayes_check<T: Scalar>(ind: &InducedDistributions<T>) -> T {
    let xs = ind.domain().len();
    let width = ind.responses().len();
    let mut worst = T::zero();
    let mut bump = |v: T| {
        let v = v.abs();
        if v > worst {
            worst = v;
        }
    };
    for x in 0..xs {
        let row = ind.joint_elems.row(x);
        let total: T = row.iter().copied().sum();
        bump(total - ind.element_marginal.prob(x));
        for r in 0..width {
            let j = row[r];
            match ind.posterior_elems(r) {
                Some(post) => bump(j - ind.marginal_r.prob(r) * post.prob(x)),
                None => bump(j),
            }
            match ind.response_given_elem(x) {
                Some(cond) => bump(j - ind.element_marginal.prob(x) * cond.prob(r)),
                None => bump(j),
            }
        }
    }
    worst
}
