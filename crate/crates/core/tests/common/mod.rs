//! Random tiny instances with integer weights, so the same instance can be
//! built over `f64` and over exact rationals.

#![allow(dead_code)]

use rand::Rng;
use stability_lab::adaptivity::{Analyst, Round};
use stability_lab::prob::{Channel, FiniteDist, Space};
use stability_lab::world::{build_world, Domain, MechanismKernel, SampleFrame, SamplePrior, World};
use stability_lab::Scalar;

#[derive(Clone, Debug)]
pub enum RawPrior {
    Product(Vec<u32>),
    /// One weight per tuple in lexicographic order.
    Explicit(Vec<u32>),
}

#[derive(Clone, Debug)]
pub struct RawWorld {
    pub xs: usize,
    pub n: usize,
    pub responses: usize,
    pub prior: RawPrior,
    /// One integer row per tuple.
    pub rows: Vec<Vec<u32>>,
}

pub fn tuples(xs: usize, n: usize) -> usize {
    xs.pow(n as u32)
}

pub fn ratio<T: Scalar>(num: u32, den: u32) -> T {
    T::of_usize(num as usize) / T::of_usize(den as usize)
}

pub fn normalize<T: Scalar>(w: &[u32]) -> Vec<T> {
    let total: u32 = w.iter().sum();
    w.iter().map(|&x| ratio(x, total)).collect()
}

/// Integer weights with a positive sum; each entry is zero with probability `zero_p`.
pub fn random_weights<R: Rng>(rng: &mut R, len: usize, zero_p: f64) -> Vec<u32> {
    loop {
        let w: Vec<u32> = (0..len)
            .map(|_| if rng.random_bool(zero_p) { 0 } else { rng.random_range(1..=6) })
            .collect();
        if w.iter().any(|&x| x > 0) {
            return w;
        }
    }
}

pub fn random_rows<R: Rng>(rng: &mut R, count: usize, width: usize) -> Vec<Vec<u32>> {
    (0..count)
        .map(|_| {
            if rng.random_bool(0.2) {
                let mut row = vec![0; width];
                row[rng.random_range(0..width)] = 1;
                row
            } else {
                random_weights(rng, width, 0.3)
            }
        })
        .collect()
}

impl RawWorld {
    pub fn random<R: Rng>(rng: &mut R, max_xs: usize, max_n: usize, max_r: usize) -> Self {
        let xs = rng.random_range(2..=max_xs);
        let n = rng.random_range(1..=max_n);
        let responses = rng.random_range(2..=max_r);
        Self::random_shape(rng, xs, n, responses)
    }

    pub fn random_shape<R: Rng>(rng: &mut R, xs: usize, n: usize, responses: usize) -> Self {
        let prior = if rng.random_bool(0.6) {
            RawPrior::Product(random_weights(rng, xs, 0.1))
        } else {
            RawPrior::Explicit(random_weights(rng, tuples(xs, n), 0.3))
        };
        let rows = random_rows(rng, tuples(xs, n), responses);
        Self {
            xs,
            n,
            responses,
            prior,
            rows,
        }
    }

    pub fn frame(&self) -> SampleFrame {
        SampleFrame::new(Domain::numbered(self.xs).unwrap(), self.n, &Default::default()).unwrap()
    }

    pub fn prior<T: Scalar>(&self, frame: &SampleFrame) -> SamplePrior<T> {
        let space = frame.domain().space().clone();
        match &self.prior {
            RawPrior::Product(w) => SamplePrior::product(FiniteDist::new(space, normalize(w)).unwrap()),
            RawPrior::Explicit(w) => {
                let weights: Vec<T> = normalize(w);
                let ts = frame.tuples();
                let decoded: Vec<(Vec<usize>, T)> = (0..ts.count()).map(|s| (ts.decode(s), weights[s])).collect();
                SamplePrior::explicit(frame, decoded.iter().map(|(t, w)| (t.as_slice(), *w))).unwrap()
            }
        }
    }

    pub fn kernel<T: Scalar>(&self, frame: &SampleFrame) -> MechanismKernel<T> {
        let rows = self.rows.clone();
        MechanismKernel::from_fn(frame, Space::numbered(self.responses), move |s| normalize(&rows[s])).unwrap()
    }

    pub fn build<T: Scalar>(&self) -> World<T> {
        let frame = self.frame();
        build_world(
            frame.domain().clone(),
            self.n,
            self.prior(&frame),
            self.kernel(&frame),
        )
        .unwrap()
    }

    /// Tuple prior weights, computed independently of the library.
    pub fn tuple_prior<T: Scalar>(&self) -> Vec<T> {
        let count = tuples(self.xs, self.n);
        match &self.prior {
            RawPrior::Explicit(w) => normalize(w),
            RawPrior::Product(w) => {
                let el: Vec<T> = normalize(w);
                (0..count)
                    .map(|s| decode(s, self.xs, self.n).iter().map(|&x| el[x]).fold(T::one(), |a, b| a * b))
                    .collect()
            }
        }
    }
}

/// Lexicographic decoding with the first position most significant.
pub fn decode(mut s: usize, xs: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for i in (0..n).rev() {
        out[i] = s % xs;
        s /= xs;
    }
    out
}

pub fn random_channel<T: Scalar, R: Rng>(rng: &mut R, from: usize, to: usize) -> Channel<T> {
    let rows = random_rows(rng, from, to);
    Channel::from_fn(Space::numbered(from), Space::numbered(to), |i| normalize(&rows[i])).unwrap()
}

/// Rounds of random queries over a world's tuples and an analyst that picks
/// among them by hashing the coin and the responses seen so far.
pub struct RandomInteraction<T> {
    pub rounds: Vec<Round<T>>,
    pub analyst: Analyst<T>,
}

pub fn random_interaction<T: Scalar, R: Rng>(rng: &mut R, raw: &RawWorld, k: usize) -> RandomInteraction<T> {
    let frame = raw.frame();
    let count = tuples(raw.xs, raw.n);
    let mut widths = Vec::with_capacity(k);
    let mut rounds = Vec::with_capacity(k);
    for i in 0..k {
        let width = rng.random_range(2..=3);
        let queries = rng.random_range(1..=2);
        let kernels: Vec<(String, MechanismKernel<T>)> = (0..queries)
            .map(|j| {
                let rows = random_rows(rng, count, width);
                let k = MechanismKernel::from_fn(&frame, Space::numbered(width), move |s| normalize(&rows[s])).unwrap();
                (format!("q{i}_{j}"), k)
            })
            .collect();
        widths.push(queries);
        rounds.push(Round::new(kernels).unwrap());
    }
    let salt: usize = rng.random_range(0..1000);
    let coin_count = rng.random_range(1..=2);
    let coin_weights = random_weights(rng, coin_count, 0.0);
    let coins = FiniteDist::new(Space::numbered(coin_weights.len()), normalize(&coin_weights)).unwrap();
    let analyst = Analyst::custom(move |coin, prefix: &[usize]| {
        let round = prefix.len();
        let h = prefix.iter().fold(salt + 7 * coin, |a, &r| a * 31 + r + 1);
        widths.get(round).map(|&q| format!("q{round}_{}", h % q))
    })
    .with_coins(coins);
    RandomInteraction { rounds, analyst }
}
