//! Distances and divergences between finite distributions.


use super::{Channel, FiniteDist, JointDist};
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub(crate) fn half_l1<T: Scalar>(p: &[T], q: &[T]) -> T {
    let two = T::one() + T::one();
    p.iter().zip(q).map(|(a, b)| (*a - *b).abs()).sum::<T>() / two
}

/// `Σ max(0, p(r) − ratio·q(r))`: the largest `p(B) − ratio·q(B)` over subsets.
pub(crate) fn excess_mass<T: Scalar>(p: &[T], q: &[T], ratio: T) -> T {
    p.iter()
        .zip(q)
        .map(|(a, b)| (*a - ratio * *b).positive_part())
        .sum()
}

/// Total variation distance, `½ Σ |p(r) − q(r)|`.
pub fn statistical_distance<T: Scalar>(p: &FiniteDist<T>, q: &FiniteDist<T>) -> Result<T> {
    p.ensure_same_space(q)?;
    Ok(half_l1(p.weights(), q.weights()))
}

/// Smallest δ with `p(B) ≤ ratio·q(B) + δ` for every subset `B`.
///
/// `ratio` plays the role of `e^ε`; taking it as an input keeps this usable
/// with exact rationals whenever `e^ε` is rational (e.g. ε = 0 or ε = ln 3).
pub fn min_delta_for_ratio<T: Scalar>(p: &FiniteDist<T>, q: &FiniteDist<T>, ratio: T) -> Result<T> {
    p.ensure_same_space(q)?;
    if ratio < T::zero() {
        return Err(Error::InvalidArguments("likelihood ratio must be non-negative".into()));
    }
    Ok(excess_mass(p.weights(), q.weights(), ratio))
}

/// One-sided (ε, δ) slack: smallest δ with `p(B) ≤ e^ε q(B) + δ`.
pub fn min_delta_for_eps<T: Real>(p: &FiniteDist<T>, q: &FiniteDist<T>, eps: T) -> Result<T> {
    if eps < T::zero() {
        return Err(Error::InvalidArguments(format!("ε = {eps} is negative")));
    }
    min_delta_for_ratio(p, q, eps.exp())
}

pub fn indistinguishability_delta_for_ratio<T: Scalar>(
    p: &FiniteDist<T>,
    q: &FiniteDist<T>,
    ratio: T,
) -> Result<T> {
    Ok(min_delta_for_ratio(p, q, ratio)?.max_of(min_delta_for_ratio(q, p, ratio)?))
}

/// Smallest δ making `p` and `q` (ε, δ)-indistinguishable in both directions.
pub fn indistinguishability_delta<T: Real>(p: &FiniteDist<T>, q: &FiniteDist<T>, eps: T) -> Result<T> {
    Ok(min_delta_for_eps(p, q, eps)?.max_of(min_delta_for_eps(q, p, eps)?))
}

/// Same as [`indistinguishability_delta`] for two joints over the same product space.
pub fn joint_indistinguishability_delta<T: Real>(
    a: &JointDist<T>,
    b: &JointDist<T>,
    eps: T,
) -> Result<T> {
    a.ensure_same_shape(b)?;
    let ratio = eps.exp();
    Ok(excess_mass(a.weights(), b.weights(), ratio)
        .max_of(excess_mass(b.weights(), a.weights(), ratio)))
}

pub(crate) fn max_log_ratio<T: Real>(p: &[T], q: &[T]) -> T {
    let mut worst = T::neg_infinity();
    for (a, b) in p.iter().zip(q) {
        if *a <= T::zero() {
            continue;
        }
        let r = if *b <= T::zero() {
            T::infinity()
        } else {
            (*a / *b).ln()
        };
        if r > worst {
            worst = r;
        }
    }
    worst.max(T::zero())
}

/// Max divergence `D∞(p‖q) = max_r ln(p(r)/q(r))`, clamped at 0; `+∞` on support mismatch.
pub fn max_divergence<T: Real>(p: &FiniteDist<T>, q: &FiniteDist<T>) -> Result<T> {
    p.ensure_same_space(q)?;
    Ok(max_log_ratio(p.weights(), q.weights()))
}

/// Smallest ε at which `p`, `q` are (ε, δ)-indistinguishable, found by bisection
/// on the monotone map ε ↦ δ*(ε). Returns `+∞` when no finite ε suffices.
pub fn min_eps_for_delta<T: Real>(p: &FiniteDist<T>, q: &FiniteDist<T>, delta: T) -> Result<T> {
    p.ensure_same_space(q)?;
    let slack = |eps: T| -> T {
        let r = eps.exp();
        excess_mass(p.weights(), q.weights(), r).max_of(excess_mass(q.weights(), p.weights(), r))
    };
    if slack(T::zero()) <= delta {
        return Ok(T::zero());
    }
    let mut hi = T::one();
    let cap = T::of_f64(700.0);
    while slack(hi) > delta {
        hi = hi + hi;
        if hi > cap {
            return Ok(T::infinity());
        }
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) / (T::one() + T::one());
        if slack(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Maximal leakage `ln Σ_y max_{x: P(x)>0} P(y|x)` of a joint over `X × Y`.
pub fn maximal_leakage<T: Real>(joint: &JointDist<T>) -> Result<T> {
    let marginal = joint.left_marginal();
    if marginal.support().next().is_none() {
        return Err(Error::InvalidDistribution("joint has no mass".into()));
    }
    let width = joint.right().len();
    let mut column_max = vec![T::zero(); width];
    for x in marginal.support() {
        let px = marginal.prob(x);
        for (y, m) in column_max.iter_mut().enumerate() {
            let c = joint.get(x, y) / px;
            if c > *m {
                *m = c;
            }
        }
    }
    let total: T = column_max.into_iter().sum();
    Ok(total.ln().max(T::zero()))
}

/// Pushes `p` through `channel`; the channel must have a row for every
/// positive-mass outcome of `p`.
pub fn pushforward<T: Scalar>(p: &FiniteDist<T>, channel: &Channel<T>) -> Result<FiniteDist<T>> {
    if p.space() != channel.input() {
        return Err(Error::DomainMismatch(format!(
            "distribution over {:?}, channel from {:?}",
            p.space(),
            channel.input()
        )));
    }
    let mut out = vec![T::zero(); channel.output().len()];
    for i in p.support() {
        if !channel.has_row(i) {
            return Err(Error::DomainMismatch(format!(
                "channel has no row for outcome {}",
                p.space().label(i)
            )));
        }
        let w = p.prob(i);
        for (o, c) in channel.row(i).iter().enumerate() {
            if !c.is_zero() {
                out[o] = out[o] + w * *c;
            }
        }
    }
    Ok(FiniteDist::from_parts_unchecked(channel.output().clone(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Space;
    use crate::scalar::Rational;
    use num_traits::Zero;

    fn bern(p: f64) -> FiniteDist<f64> {
        FiniteDist::bernoulli(p).unwrap()
    }

    #[test]
    fn statistical_distance_examples() {
        assert_eq!(statistical_distance(&bern(0.5), &bern(0.5)).unwrap(), 0.0);
        let s = Space::labeled(["a", "b"]).unwrap();
        let a = FiniteDist::<f64>::point(s.clone(), 0);
        let b = FiniteDist::<f64>::point(s, 1);
        assert_eq!(statistical_distance(&a, &b).unwrap(), 1.0);
        assert!((statistical_distance(&bern(0.5), &bern(0.75)).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let u = FiniteDist::<f64>::uniform(Space::numbered(3));
        assert!(matches!(
            statistical_distance(&bern(0.5), &u),
            Err(Error::DomainMismatch(_))
        ));
        assert!(matches!(
            min_delta_for_eps(&bern(0.5), &u, 0.0),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn min_delta_examples() {
        let p = bern(0.3);
        assert_eq!(min_delta_for_eps(&p, &p, 0.0).unwrap(), 0.0);
        let s = Space::labeled(["a", "b"]).unwrap();
        let a = FiniteDist::<f64>::point(s.clone(), 0);
        let b = FiniteDist::<f64>::point(s, 1);
        assert_eq!(min_delta_for_eps(&a, &b, 1.0).unwrap(), 1.0);
        assert!((min_delta_for_eps(&bern(0.6), &bern(0.4), 0.0).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn indistinguishability_examples() {
        let p = bern(0.6);
        let q = bern(0.4);
        assert_eq!(indistinguishability_delta(&p, &p, 0.0).unwrap(), 0.0);
        assert!((indistinguishability_delta(&p, &q, 0.0).unwrap() - 0.2).abs() < 1e-15);
        let s = Space::labeled(["a", "b"]).unwrap();
        let a = FiniteDist::<f64>::point(s.clone(), 0);
        let b = FiniteDist::<f64>::point(s, 1);
        assert_eq!(indistinguishability_delta(&a, &b, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn exact_rational_min_delta() {
        let p: FiniteDist<Rational> = FiniteDist::bernoulli(Rational::new(3, 5)).unwrap();
        let q: FiniteDist<Rational> = FiniteDist::bernoulli(Rational::new(2, 5)).unwrap();
        assert_eq!(
            min_delta_for_ratio(&p, &q, Rational::from_integer(1)).unwrap(),
            Rational::new(1, 5)
        );
        assert_eq!(
            indistinguishability_delta_for_ratio(&p, &q, Rational::new(3, 2)).unwrap(),
            Rational::zero()
        );
    }

    #[test]
    fn maximal_leakage_examples() {
        let x = Space::numbered(2);
        let y = Space::numbered(2);
        let indep = JointDist::product(&bern(0.3), &bern(0.8));
        assert!(maximal_leakage(&indep).unwrap().abs() < 1e-12);

        let m = 4;
        let id: Vec<f64> = (0..m * m)
            .map(|i| if i / m == i % m { 1.0 / m as f64 } else { 0.0 })
            .collect();
        let j = JointDist::new(Space::numbered(m), Space::numbered(m), id).unwrap();
        assert!((maximal_leakage(&j).unwrap() - (m as f64).ln()).abs() < 1e-12);

        let bsc = JointDist::new(x, y, vec![0.375, 0.125, 0.125, 0.375]).unwrap();
        assert!((maximal_leakage(&bsc).unwrap() - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_joint_rejected_by_leakage() {
        let j = JointDist::from_parts_unchecked(Space::numbered(2), Space::numbered(2), vec![0.0; 4]);
        assert!(matches!(maximal_leakage(&j), Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn pushforward_examples() {
        let p = bern(0.3);
        let same = pushforward(&p, &Channel::identity(p.space().clone())).unwrap();
        assert_eq!(same, p);

        let constant = Channel::deterministic(p.space().clone(), Space::labeled(["c"]).unwrap(), |_| 0);
        let pm = pushforward(&p, &constant).unwrap();
        assert_eq!(pm.weights(), &[1.0]);

        let flip = Channel::from_fn(Space::numbered(2), Space::numbered(2), |i| {
            if i == 0 { vec![0.75, 0.25] } else { vec![0.25, 0.75] }
        })
        .unwrap();
        let out = pushforward(&bern(0.5), &flip).unwrap();
        assert!((out.prob(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pushforward_missing_row() {
        let ch: Channel<f64> = Channel::new(Space::numbered(2), Space::numbered(2));
        assert!(matches!(pushforward(&bern(0.5), &ch), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn max_divergence_and_bisection_agree() {
        let p = FiniteDist::new(Space::numbered(3), vec![0.5f64, 0.3, 0.2]).unwrap();
        let q = FiniteDist::new(Space::numbered(3), vec![0.25, 0.35, 0.4]).unwrap();
        let d = max_divergence(&p, &q).unwrap().max(max_divergence(&q, &p).unwrap());
        assert!((d - 2f64.ln()).abs() < 1e-12);
        let e = min_eps_for_delta(&p, &q, 0.0).unwrap();
        assert!((e - d).abs() < 1e-9);
    }
}
