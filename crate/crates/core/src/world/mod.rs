//! Finite worlds and the distributions they induce.

mod frame;
mod induce;
mod kernel;
mod prior;
mod spec;

pub use frame::{Budget, Domain, SampleFrame, TupleSpace};
pub use induce::{
    bayes_check, element_release_analytic, element_release_analytic_prior, induce,
    InducedDistributions, SetLevel,
};
pub use kernel::MechanismKernel;
pub use prior::SamplePrior;
pub use spec::{KernelSpec, PriorSpec, WorldSpec};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A domain, sample size, prior over sample tuples, and mechanism kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct World<T> {
    frame: SampleFrame,
    prior: SamplePrior<T>,
    kernel: MechanismKernel<T>,
    budget: Budget,
}

/// Validates and assembles a world.
pub fn build_world<T: Scalar>(
    domain: Domain,
    n: usize,
    prior: SamplePrior<T>,
    kernel: MechanismKernel<T>,
) -> Result<World<T>> {
    let budget = Budget::default();
    let frame = SampleFrame::new(domain, n, &budget)?;
    World::new(frame, prior, kernel, budget)
}

impl<T: Scalar> World<T> {
    pub fn new(
        frame: SampleFrame,
        prior: SamplePrior<T>,
        kernel: MechanismKernel<T>,
        budget: Budget,
    ) -> Result<Self> {
        prior.validate(&frame)?;
        if kernel.channel().input().len() != frame.tuples().count() {
            return Err(Error::DomainMismatch(format!(
                "kernel has {} input rows, world has {} tuples",
                kernel.channel().input().len(),
                frame.tuples().count()
            )));
        }
        let weights = prior.tuple_weights(&frame);
        if let Some(s) = weights
            .iter()
            .enumerate()
            .position(|(s, w)| *w > T::zero() && !kernel.has_row(s))
        {
            return Err(Error::DomainMismatch(format!(
                "kernel has no row for positive-prior tuple {}",
                frame.tuple_label(s)
            )));
        }
        Ok(Self {
            frame,
            prior,
            kernel,
            budget,
        })
    }

    pub fn frame(&self) -> &SampleFrame {
        &self.frame
    }

    pub fn domain(&self) -> &Domain {
        self.frame.domain()
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn prior(&self) -> &SamplePrior<T> {
        &self.prior
    }

    pub fn kernel(&self) -> &MechanismKernel<T> {
        &self.kernel
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    /// Same world with a different mechanism.
    pub fn with_kernel(&self, kernel: MechanismKernel<T>) -> Result<Self> {
        Self::new(self.frame.clone(), self.prior.clone(), kernel, self.budget)
    }

    pub fn tuple_weights(&self) -> Vec<T> {
        self.prior.tuple_weights(&self.frame)
    }
}
