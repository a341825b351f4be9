use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prob::Space;
use crate::scalar::Scalar;
use crate::world::{MechanismKernel, SampleFrame};

type SelectFn<T> = dyn Fn(&[usize]) -> Vec<(Vec<usize>, T)> + Send + Sync;
type EncodeFn<T> = dyn Fn(&[usize]) -> Vec<T> + Send + Sync;

/// Chooses which `m` sample positions are kept (the map `g`).
#[derive(Clone)]
pub enum Selector<T> {
    /// Positions `0..m`.
    Prefix,
    /// A fixed list of positions.
    Positions(Vec<usize>),
    /// Every `m`-subset of positions with equal probability.
    UniformSubset,
    /// Arbitrary randomized selection: `(positions, probability)` pairs per tuple.
    Randomized(Arc<SelectFn<T>>),
}

/// Maps the kept sub-tuple to a response distribution (the map `f`).
#[derive(Clone)]
pub enum Encoder<T> {
    /// Outputs the kept sub-tuple itself.
    Identity,
    /// Single response regardless of input.
    Constant,
    Custom { responses: Space, f: Arc<EncodeFn<T>> },
}

impl<T> fmt::Debug for Selector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Prefix => write!(f, "Prefix"),
            Self::Positions(p) => write!(f, "Positions({p:?})"),
            Self::UniformSubset => write!(f, "UniformSubset"),
            Self::Randomized(_) => write!(f, "Randomized(..)"),
        }
    }
}

impl<T> fmt::Debug for Encoder<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "Identity"),
            Self::Constant => write!(f, "Constant"),
            Self::Custom { responses, .. } => write!(f, "Custom({responses:?})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompressionSpec<T> {
    pub m: usize,
    pub selector: Selector<T>,
    pub encoder: Encoder<T>,
}

fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Builds the mechanism `f ∘ g`.
pub fn build_compression_mechanism<T: Scalar>(
    spec: &CompressionSpec<T>,
    frame: &SampleFrame,
) -> Result<MechanismKernel<T>> {
    let n = frame.n();
    let m = spec.m;
    if m == 0 || 2 * m >= n {
        return Err(Error::InvalidArguments(format!(
            "compression size m = {m} must satisfy 0 < m < n/2 with n = {n}"
        )));
    }
    let domain = frame.domain().space();
    let sub = crate::world::TupleSpace::new(domain.len(), m, &Default::default())?;
    let responses = match &spec.encoder {
        Encoder::Identity if m == 1 => domain.clone(),
        Encoder::Identity => {
            let f = SampleFrame::new(frame.domain().clone(), m, &Default::default())?;
            Space::labeled((0..sub.count()).map(|i| f.tuple_label(i))).expect("tuple labels are distinct")
        }
        Encoder::Constant => Space::labeled(["c"]).expect("single label"),
        Encoder::Custom { responses, .. } => responses.clone(),
    };
    let width = responses.len();
    let all_subsets = subsets(n, m);
    let uniform_w = T::one() / T::of_usize(all_subsets.len());
    let ts = *frame.tuples();

    let mut ch = crate::prob::Channel::new(ts.space(), responses);
    for s in 0..ts.count() {
        let tuple = ts.decode(s);
        let choices: Vec<(Vec<usize>, T)> = match &spec.selector {
            Selector::Prefix => vec![((0..m).collect(), T::one())],
            Selector::Positions(p) => vec![(p.clone(), T::one())],
            Selector::UniformSubset => all_subsets.iter().map(|p| (p.clone(), uniform_w)).collect(),
            Selector::Randomized(g) => g(&tuple),
        };
        let mut row = vec![T::zero(); width];
        for (positions, w) in choices {
            if positions.len() != m {
                return Err(Error::InvalidArguments(format!(
                    "selector kept {} positions, expected {m}",
                    positions.len()
                )));
            }
            let mut seen = vec![false; n];
            for &p in &positions {
                if p >= n || seen[p] {
                    return Err(Error::InvalidArguments(format!(
                        "selector positions {positions:?} are not distinct indices below {n}"
                    )));
                }
                seen[p] = true;
            }
            let kept: Vec<usize> = positions.iter().map(|&p| tuple[p]).collect();
            match &spec.encoder {
                Encoder::Identity => {
                    let o = sub.encode(&kept)?;
                    row[o] = row[o] + w;
                }
                Encoder::Constant => row[0] = row[0] + w,
                Encoder::Custom { f, .. } => {
                    let out = f(&kept);
                    if out.len() != width {
                        return Err(Error::DomainMismatch(format!(
                            "encoder returned {} weights for {width} responses",
                            out.len()
                        )));
                    }
                    for (acc, v) in row.iter_mut().zip(out) {
                        *acc = *acc + w * v;
                    }
                }
            }
        }
        ch.set_row(s, row)?;
    }
    Ok(MechanismKernel::new(ch).with_compression_size(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::build_element_release;
    use crate::scalar::Rational;
    use crate::world::{Budget, Domain};

    fn frame(n: usize) -> SampleFrame {
        SampleFrame::new(Domain::numbered(2).unwrap(), n, &Budget::default()).unwrap()
    }

    #[test]
    fn uniform_single_selection_is_element_release() {
        let f = frame(3);
        let spec = CompressionSpec::<Rational> {
            m: 1,
            selector: Selector::UniformSubset,
            encoder: Encoder::Identity,
        };
        let a = build_compression_mechanism(&spec, &f).unwrap();
        let b: MechanismKernel<Rational> = build_element_release(&f).unwrap();
        assert_eq!(a.channel(), b.channel());
        assert_eq!(a.compression_size(), Some(1));
    }

    #[test]
    fn constant_encoder_is_constant() {
        let spec = CompressionSpec::<f64> {
            m: 1,
            selector: Selector::Prefix,
            encoder: Encoder::Constant,
        };
        let k = build_compression_mechanism(&spec, &frame(3)).unwrap();
        assert_eq!(k.responses().len(), 1);
    }

    #[test]
    fn invalid_selectors_rejected() {
        let f = frame(3);
        let dup = CompressionSpec::<f64> {
            m: 1,
            selector: Selector::Positions(vec![5]),
            encoder: Encoder::Identity,
        };
        assert!(build_compression_mechanism(&dup, &f).is_err());
        let too_big = CompressionSpec::<f64> {
            m: 2,
            selector: Selector::Prefix,
            encoder: Encoder::Identity,
        };
        assert!(build_compression_mechanism(&too_big, &f).is_err());
    }
}
