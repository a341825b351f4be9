use super::frame::SampleFrame;
use crate::error::{Error, Result};
use crate::prob::FiniteDist;
use crate::scalar::Scalar;

/// Distribution over ordered sample tuples.
///
/// Product priors are stored as their element distribution and expanded on
/// demand; explicit priors hold one weight per tuple index.
#[derive(Clone, Debug, PartialEq)]
pub enum SamplePrior<T> {
    Product(FiniteDist<T>),
    Explicit(FiniteDist<T>),
}

impl<T: Scalar> SamplePrior<T> {
    pub fn product(element: FiniteDist<T>) -> Self {
        Self::Product(element)
    }

    /// Builds an explicit prior from `(tuple, weight)` pairs; unlisted tuples get zero.
    pub fn explicit<'a, I>(frame: &SampleFrame, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [usize], T)>,
    {
        let ts = frame.tuples();
        let mut weights = vec![T::zero(); ts.count()];
        for (tuple, w) in entries {
            let idx = ts.encode(tuple)?;
            weights[idx] = weights[idx] + w;
        }
        Ok(Self::Explicit(FiniteDist::new(ts.space(), weights)?))
    }

    pub fn is_product(&self) -> bool {
        matches!(self, Self::Product(_))
    }

    pub fn element_dist(&self) -> Option<&FiniteDist<T>> {
        match self {
            Self::Product(d) => Some(d),
            Self::Explicit(_) => None,
        }
    }

    pub(crate) fn validate(&self, frame: &SampleFrame) -> Result<()> {
        match self {
            Self::Product(d) => {
                if d.space() != frame.domain().space() {
                    return Err(Error::DomainMismatch(
                        "product prior is not over the world's domain".into(),
                    ));
                }
            }
            Self::Explicit(d) => {
                if d.len() != frame.tuples().count() {
                    return Err(Error::DomainMismatch(format!(
                        "explicit prior has {} tuples, expected {}",
                        d.len(),
                        frame.tuples().count()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Weight of every tuple, in index order.
    pub fn tuple_weights(&self, frame: &SampleFrame) -> Vec<T> {
        match self {
            Self::Explicit(d) => d.weights().to_vec(),
            Self::Product(d) => {
                let ts = frame.tuples();
                let mut buf = vec![0; ts.n()];
                (0..ts.count())
                    .map(|i| {
                        ts.decode_into(i, &mut buf);
                        buf.iter().fold(T::one(), |acc, &x| acc * d.prob(x))
                    })
                    .collect()
            }
        }
    }

    /// Expanded as an explicit prior over tuples.
    pub fn to_explicit(&self, frame: &SampleFrame) -> Self {
        Self::Explicit(FiniteDist::from_parts_unchecked(
            frame.tuples().space(),
            self.tuple_weights(frame),
        ))
    }
}
