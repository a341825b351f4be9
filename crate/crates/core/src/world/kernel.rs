use super::frame::SampleFrame;
use crate::error::{Error, Result};
use crate::prob::{Channel, FiniteDist, Space};
use crate::scalar::Scalar;

/// Conditional response distribution given the sample tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct MechanismKernel<T> {
    channel: Channel<T>,
    response_values: Option<Vec<f64>>,
    compression_size: Option<usize>,
}

impl<T: Scalar> MechanismKernel<T> {
    /// The channel's input must be the frame's tuple space (anonymous, `|X|^n` outcomes).
    pub fn new(channel: Channel<T>) -> Self {
        Self {
            channel,
            response_values: None,
            compression_size: None,
        }
    }

    pub fn from_fn(
        frame: &SampleFrame,
        responses: Space,
        f: impl FnMut(usize) -> Vec<T>,
    ) -> Result<Self> {
        Ok(Self::new(Channel::from_fn(frame.tuples().space(), responses, f)?))
    }

    pub fn deterministic(frame: &SampleFrame, responses: Space, f: impl Fn(usize) -> usize) -> Self {
        Self::new(Channel::deterministic(frame.tuples().space(), responses, f))
    }

    /// Single-response mechanism; reveals nothing.
    pub fn constant(frame: &SampleFrame) -> Self {
        Self::deterministic(frame, Space::labeled(["c"]).expect("single label"), |_| 0)
    }

    /// Attaches a numeric value to every response (needed by accuracy checks).
    pub fn with_response_values(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.channel.output().len() {
            return Err(Error::DomainMismatch(format!(
                "{} response values for {} responses",
                values.len(),
                self.channel.output().len()
            )));
        }
        self.response_values = Some(values);
        Ok(self)
    }

    pub(crate) fn with_compression_size(mut self, m: usize) -> Self {
        self.compression_size = Some(m);
        self
    }

    pub fn channel(&self) -> &Channel<T> {
        &self.channel
    }

    pub fn responses(&self) -> &Space {
        self.channel.output()
    }

    pub fn response_values(&self) -> Option<&[f64]> {
        self.response_values.as_deref()
    }

    /// Compression size `m` when built as a compression scheme.
    pub fn compression_size(&self) -> Option<usize> {
        self.compression_size
    }

    pub fn row(&self, tuple: usize) -> &[T] {
        self.channel.row(tuple)
    }

    pub fn row_dist(&self, tuple: usize) -> Option<FiniteDist<T>> {
        self.channel.row_dist(tuple)
    }

    pub fn has_row(&self, tuple: usize) -> bool {
        self.channel.has_row(tuple)
    }

    /// Applies a post-processing channel to the responses.
    pub fn post_process(&self, f: &Channel<T>) -> Result<Self> {
        Ok(Self {
            channel: self.channel.then(f)?,
            response_values: None,
            compression_size: self.compression_size,
        })
    }
}
