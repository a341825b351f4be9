use serde::Serialize;

use super::certify::{lmi_certify_induced, mi_certify_induced};
use super::implication::compression_lss_threshold;
use crate::error::{Error, Result};
use crate::mechanisms::build_parity_mechanism;
use crate::prob::FiniteDist;
use crate::stability::{loss_profile, lss_certify};
use crate::world::{
    build_world, element_release_analytic, induce, Domain, InducedDistributions, SampleFrame,
    SamplePrior,
};

/// One inequality a separation asserts, with its measured side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prong {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    /// `measured − threshold` signed so that positive means the claim holds
    /// with room to spare.
    pub margin: f64,
    pub vacuous: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub which: String,
    pub prongs: Vec<Prong>,
    pub pass: bool,
}

impl SeparationReport {
    fn new(which: &str, prongs: Vec<Prong>) -> Self {
        let pass = prongs.iter().all(|p| p.pass);
        Self {
            which: which.to_string(),
            prongs,
            pass,
        }
    }

    pub fn prong(&self, name: &str) -> Option<&Prong> {
        self.prongs.iter().find(|p| p.name == name)
    }
}

fn at_most(name: &str, measured: f64, threshold: f64, tol: f64) -> Prong {
    Prong {
        name: name.into(),
        measured,
        threshold,
        margin: threshold - measured,
        vacuous: false,
        pass: measured <= threshold + tol,
    }
}

fn above(name: &str, measured: f64, threshold: f64) -> Prong {
    Prong {
        name: name.into(),
        measured,
        threshold,
        margin: measured - threshold,
        vacuous: false,
        pass: measured > threshold,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParityParams {
    pub eps: f64,
    pub alpha: f64,
    pub n: usize,
}

/// The parity world: domain `{x0, x1}` with labels `0, 1` and `D(x1) = 1/2 + α`.
pub fn parity_world(alpha: f64, n: usize) -> Result<crate::world::World<f64>> {
    let d = Domain::new(["x0", "x1"])?;
    let frame = SampleFrame::new(d.clone(), n, &Default::default())?;
    let prior = SamplePrior::product(FiniteDist::new(d.space().clone(), vec![0.5 - alpha, 0.5 + alpha])?);
    let kernel = build_parity_mechanism(&frame, &[0, 1])?;
    build_world(d, n, prior, kernel)
}

/// `product(S₁×{r₀}) − e·joint(S₁×{r₀})` where `S₁` are the odd-parity tuples.
pub fn parity_mi_witness(ind: &InducedDistributions<f64>) -> Result<f64> {
    let sets = ind
        .sets()
        .ok_or_else(|| Error::Unsupported("parity witness needs set-level tables".into()))?;
    let joint = sets.joint();
    let product = sets.product();
    let mut prod = 0.0;
    let mut jnt = 0.0;
    for s in 0..joint.left().len() {
        // r1 is the odd-parity response; S1 = {s : K(s, r1) = 1}.
        if joint.get(s, 1) > 0.0 {
            prod += product.get(s, 0);
            jnt += joint.get(s, 0);
        }
    }
    Ok(prod - std::f64::consts::E * jnt)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReleaseParams {
    pub n: usize,
    pub delta: f64,
    /// Element weights; the domain has one element per weight.
    pub weights: Vec<f64>,
}

impl ReleaseParams {
    pub fn uniform(big_n: usize, n: usize, delta: f64) -> Self {
        Self {
            n,
            delta,
            weights: vec![1.0 / big_n as f64; big_n],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeparationKind {
    Parity(ParityParams),
    ElementRelease(ReleaseParams),
}

/// Checks both prongs of a separation on its canonical instance.
pub fn run_separation(which: &SeparationKind) -> Result<SeparationReport> {
    match which {
        SeparationKind::Parity(p) => parity_separation(*p),
        SeparationKind::ElementRelease(p) => release_separation(p),
    }
}

fn parity_separation(p: ParityParams) -> Result<SeparationReport> {
    if !(p.eps > 0.0 && p.eps <= 0.7) {
        return Err(Error::Precondition(format!("requires 0 < ε ≤ 0.7, got {}", p.eps)));
    }
    if !(p.alpha >= 0.0 && 7.0 * p.alpha <= p.eps + 1e-12) {
        return Err(Error::Precondition(format!(
            "requires 0 ≤ α ≤ ε/7, got α = {}",
            p.alpha
        )));
    }
    if p.n < 3 {
        return Err(Error::Precondition(format!("requires n ≥ 3, got {}", p.n)));
    }
    let world = parity_world(p.alpha, p.n)?;
    let ind = induce(&world)?;
    let lmi = lmi_certify_induced(&ind, p.eps)?.delta_star.unwrap_or(0.0);
    let mi = mi_certify_induced(&ind, 1.0)?.delta_star.unwrap_or(0.0);
    let witness = parity_mi_witness(&ind)?;
    let max_loss = loss_profile(&ind)
        .per_response
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);
    Ok(SeparationReport::new(
        "parity",
        vec![
            at_most("lmi_delta_star", lmi, 0.0, 1e-9),
            above("mi_delta_star_at_1", mi, 0.2),
            above("mi_diagonal_witness", witness, 0.2),
            Prong {
                name: "max_stability_loss".into(),
                measured: max_loss,
                threshold: 0.0,
                margin: 0.0,
                vacuous: true,
                pass: true,
            },
        ],
    ))
}

fn release_separation(p: &ReleaseParams) -> Result<SeparationReport> {
    let n = p.n as f64;
    let big_n = p.weights.len();
    if !(p.delta > 0.0 && p.delta <= 1.0) {
        return Err(Error::Precondition(format!("requires 0 < δ ≤ 1, got {}", p.delta)));
    }
    let n_floor = (2.0 * (2.0 / p.delta).ln()).max(6.0);
    if n <= n_floor {
        return Err(Error::Precondition(format!(
            "requires n > max(2 ln(2/δ), 6) = {n_floor:.6}, got {}",
            p.n
        )));
    }
    if big_n <= p.n * p.n {
        return Err(Error::Precondition(format!(
            "requires N > n² = {}, got N = {big_n}",
            p.n * p.n
        )));
    }
    let cap = 1.0 / (n * n);
    if p.weights.iter().any(|w| *w > cap + 1e-12) {
        return Err(Error::Precondition(format!("requires every element mass ≤ 1/n² = {cap}")));
    }
    let domain = Domain::numbered(big_n)?;
    let dist = FiniteDist::new(domain.space().clone(), p.weights.clone())?;
    let ind = element_release_analytic(&domain, &dist, p.n)?;

    let lmi = lmi_certify_induced(&ind, 1.0)?.delta_star.unwrap_or(0.0);
    let joint = ind.joint_elems();
    let diag_joint: f64 = (0..big_n).map(|x| joint.get(x, x)).sum();
    let diag_product: f64 = p.weights.iter().map(|w| w * w).sum();
    let bound = std::f64::consts::E * diag_product + 1.0 / (2.0 * n);

    let lss_eps = compression_lss_threshold(1, p.n, p.delta);
    let mut lss = at_most("lss_delta_star", lss_certify(&ind, lss_eps)?.delta_star, p.delta, 1e-9);
    lss.vacuous = lss_eps > 1.0;
    Ok(SeparationReport::new(
        "element_release",
        vec![
            above("lmi_delta_star_at_1", lmi, 1.0 / (2.0 * n)),
            above("diagonal_joint_mass", diag_joint, bound),
            lss,
        ],
    ))
}
