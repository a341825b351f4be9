//! JSON form of a world. Field order in the structs is the serialized order.

use serde::{Deserialize, Serialize};

use super::{Budget, Domain, MechanismKernel, SampleFrame, SamplePrior, World};
use crate::error::{Error, Result};
use crate::prob::{Channel, FiniteDist, Space};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub domain: Vec<String>,
    pub n: usize,
    pub prior: PriorSpec,
    pub kernel: KernelSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    /// iid elements with the given weights, in domain order.
    Product { weights: Vec<f64> },
    /// Listed tuples with their weights; all others get zero.
    Explicit { tuples: Vec<(Vec<String>, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub responses: Vec<String>,
    /// One row per tuple in lexicographic order; `null` for tuples without a row.
    pub rows: Vec<Option<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_values: Option<Vec<f64>>,
}

impl PriorSpec {
    pub fn build(&self, frame: &SampleFrame) -> Result<SamplePrior<f64>> {
        let space = frame.domain().space();
        match self {
            PriorSpec::Product { weights } => Ok(SamplePrior::product(FiniteDist::new(
                space.clone(),
                weights.clone(),
            )?)),
            PriorSpec::Explicit { tuples } => {
                let mut decoded = Vec::with_capacity(tuples.len());
                for (labels, w) in tuples {
                    let idx: Vec<usize> = labels
                        .iter()
                        .map(|l| {
                            space.index_of(l).ok_or_else(|| {
                                Error::InvalidArguments(format!("unknown element `{l}`"))
                            })
                        })
                        .collect::<Result<_>>()?;
                    decoded.push((idx, *w));
                }
                SamplePrior::explicit(frame, decoded.iter().map(|(t, w)| (t.as_slice(), *w)))
            }
        }
    }

    pub fn from_prior(frame: &SampleFrame, prior: &SamplePrior<f64>) -> Self {
        match prior {
            SamplePrior::Product(d) => PriorSpec::Product {
                weights: d.weights().to_vec(),
            },
            SamplePrior::Explicit(d) => PriorSpec::Explicit {
                tuples: d
                    .support()
                    .map(|s| {
                        let labels = frame
                            .tuples()
                            .decode(s)
                            .into_iter()
                            .map(|x| frame.domain().space().label(x))
                            .collect();
                        (labels, d.prob(s))
                    })
                    .collect(),
            },
        }
    }
}

impl KernelSpec {
    pub fn build(&self, frame: &SampleFrame) -> Result<MechanismKernel<f64>> {
        let responses = Space::labeled(self.responses.iter().cloned())
            .ok_or_else(|| Error::InvalidArguments("response labels must be unique".into()))?;
        if self.rows.len() != frame.tuples().count() {
            return Err(Error::DomainMismatch(format!(
                "kernel lists {} rows, world has {} tuples",
                self.rows.len(),
                frame.tuples().count()
            )));
        }
        let mut ch = Channel::new(frame.tuples().space(), responses);
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(row) = row {
                ch.set_row(i, row.clone())?;
            }
        }
        let k = MechanismKernel::new(ch);
        match &self.response_values {
            Some(v) => k.with_response_values(v.clone()),
            None => Ok(k),
        }
    }

    pub fn from_kernel(kernel: &MechanismKernel<f64>) -> Self {
        let ch = kernel.channel();
        Self {
            responses: (0..ch.output().len()).map(|r| ch.output().label(r)).collect(),
            rows: (0..ch.input().len())
                .map(|i| ch.has_row(i).then(|| ch.row(i).to_vec()))
                .collect(),
            response_values: kernel.response_values().map(<[f64]>::to_vec),
        }
    }
}

impl WorldSpec {
    pub fn build(&self, budget: Budget) -> Result<World<f64>> {
        let domain = Domain::new(self.domain.iter().cloned())?;
        let frame = SampleFrame::new(domain, self.n, &budget)?;
        let prior = self.prior.build(&frame)?;
        let kernel = self.kernel.build(&frame)?;
        World::new(frame, prior, kernel, budget)
    }
}

impl World<f64> {
    pub fn to_spec(&self) -> WorldSpec {
        let frame = self.frame();
        WorldSpec {
            domain: (0..frame.domain().size())
                .map(|x| frame.domain().space().label(x))
                .collect(),
            n: frame.n(),
            prior: PriorSpec::from_prior(frame, self.prior()),
            kernel: KernelSpec::from_kernel(self.kernel()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("world spec serializes")
    }

    pub fn from_json(text: &str, budget: Budget) -> Result<Self> {
        let spec: WorldSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArguments(format!("world JSON: {e}")))?;
        spec.build(budget)
    }
}
