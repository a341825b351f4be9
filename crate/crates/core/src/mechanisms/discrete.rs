use crate::error::{Error, Result};
use crate::prob::Space;
use crate::scalar::Scalar;
use crate::world::{MechanismKernel, SampleFrame};

fn check_labels(frame: &SampleFrame, labels: &[u8]) -> Result<()> {
    if labels.len() != frame.domain().size() {
        return Err(Error::DomainMismatch(format!(
            "{} labels for a domain of {}",
            labels.len(),
            frame.domain().size()
        )));
    }
    if labels.iter().any(|&b| b > 1) {
        return Err(Error::InvalidArguments("labels must be 0 or 1".into()));
    }
    Ok(())
}

/// Outputs `|{i : f(s_i) = 1}| mod 2`.
pub fn build_parity_mechanism<T: Scalar>(frame: &SampleFrame, labels: &[u8]) -> Result<MechanismKernel<T>> {
    check_labels(frame, labels)?;
    let ts = *frame.tuples();
    let labels = labels.to_vec();
    Ok(MechanismKernel::deterministic(frame, Space::numbered(2), move |s| {
        ts.decode(s).iter().map(|&x| labels[x] as usize).sum::<usize>() % 2
    }))
}

/// Outputs one uniformly chosen position of the sample; responses are the domain.
pub fn build_element_release<T: Scalar>(frame: &SampleFrame) -> Result<MechanismKernel<T>> {
    let ts = *frame.tuples();
    let xs = frame.domain().size();
    let n = T::of_usize(frame.n());
    let mut counts = vec![0u32; xs];
    MechanismKernel::from_fn(frame, frame.domain().space().clone(), |s| {
        ts.counts_into(s, &mut counts);
        counts.iter().map(|&c| T::of_usize(c as usize) / n).collect()
    })
}

/// Releases every position's label, each flipped independently with
/// probability `p_flip`. Responses are bit strings, position 0 first.
pub fn build_randomized_response<T: Scalar>(
    frame: &SampleFrame,
    labels: &[u8],
    p_flip: T,
) -> Result<MechanismKernel<T>> {
    check_labels(frame, labels)?;
    if !(p_flip > T::zero() && p_flip + p_flip < T::one()) {
        return Err(Error::InvalidArguments(format!(
            "flip probability {p_flip} must lie in (0, 1/2)"
        )));
    }
    let n = frame.n();
    if n > 20 {
        return Err(Error::BudgetExceeded {
            what: "randomized-response outputs".into(),
            size: 1u128 << n,
            budget: 1 << 20,
        });
    }
    let outputs = 1usize << n;
    let space = Space::labeled((0..outputs).map(|o| {
        (0..n)
            .map(|i| if (o >> (n - 1 - i)) & 1 == 1 { '1' } else { '0' })
            .collect::<String>()
    }))
    .expect("bit strings are distinct");
    let ts = *frame.tuples();
    let keep = T::one() - p_flip;
    MechanismKernel::from_fn(frame, space, |s| {
        let tuple = ts.decode(s);
        (0..outputs)
            .map(|o| {
                tuple.iter().enumerate().fold(T::one(), |acc, (i, &x)| {
                    let bit = ((o >> (n - 1 - i)) & 1) as u8;
                    acc * if bit == labels[x] { keep } else { p_flip }
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::world::{Budget, Domain};

    fn frame(xs: usize, n: usize) -> SampleFrame {
        SampleFrame::new(Domain::numbered(xs).unwrap(), n, &Budget::default()).unwrap()
    }

    #[test]
    fn parity_n1_is_label() {
        let f = frame(3, 1);
        let k: MechanismKernel<f64> = build_parity_mechanism(&f, &[1, 0, 1]).unwrap();
        assert_eq!(k.row(0), &[0.0, 1.0]);
        assert_eq!(k.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn element_release_counts() {
        let f = SampleFrame::new(Domain::new(["a", "b"]).unwrap(), 3, &Budget::default()).unwrap();
        let k: MechanismKernel<Rational> = build_element_release(&f).unwrap();
        let s = f.tuples().encode(&[0, 0, 1]).unwrap();
        assert_eq!(k.row(s), &[Rational::new(2, 3), Rational::new(1, 3)]);
    }

    #[test]
    fn randomized_response_rows() {
        let f = frame(2, 2);
        let k = build_randomized_response(&f, &[0, 1], Rational::new(1, 4)).unwrap();
        let s = f.tuples().encode(&[0, 1]).unwrap();
        let out = k.responses().index_of("01").unwrap();
        assert_eq!(k.row(s)[out], Rational::new(9, 16));
        assert!(build_randomized_response(&f, &[0, 1], 0.5f64).is_err());
    }
}
