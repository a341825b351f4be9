use serde::Serialize;

use super::certify::{
    dp_certify, lmi_certify_induced, lml_certify_induced, lss_notion_certify, mi_certify_induced,
    ts_certify, NotionCertificate,
};
use crate::error::{Error, Result};
use crate::prob::FiniteDist;
use crate::scalar::Real;
use crate::world::{element_release_analytic, induce, Domain, InducedDistributions, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Implication {
    DpToLmi,
    MiToLmi,
    TsToLmi,
    LmlToLmi,
    LmiToLss,
    CsToLss,
}

impl Implication {
    pub const ALL: [Implication; 6] = [
        Implication::DpToLmi,
        Implication::MiToLmi,
        Implication::TsToLmi,
        Implication::LmlToLmi,
        Implication::LmiToLss,
        Implication::CsToLss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Implication::DpToLmi => "dp_to_lmi",
            Implication::MiToLmi => "mi_to_lmi",
            Implication::TsToLmi => "ts_to_lmi",
            Implication::LmlToLmi => "lml_to_lmi",
            Implication::LmiToLss => "lmi_to_lss",
            Implication::CsToLss => "cs_to_lss",
        }
    }
}

/// What an implication is checked on.
#[derive(Clone, Copy, Debug)]
pub enum Instance<'a, T> {
    World(&'a World<T>),
    /// Uniform element release under an iid prior, via the closed form.
    /// Only element-level notions can be certified on it.
    AnalyticRelease {
        domain: &'a Domain,
        element_dist: &'a FiniteDist<T>,
        n: usize,
    },
}

impl<'a, T: Real> Instance<'a, T> {
    fn induced(&self) -> Result<InducedDistributions<T>> {
        match self {
            Instance::World(w) => induce(w),
            Instance::AnalyticRelease {
                domain,
                element_dist,
                n,
            } => element_release_analytic(domain, element_dist, *n),
        }
    }

    fn world(&self, what: &str) -> Result<&'a World<T>> {
        match self {
            Instance::World(w) => Ok(w),
            Instance::AnalyticRelease { .. } => Err(Error::Unsupported(format!(
                "{what} needs an enumerated world"
            ))),
        }
    }

    fn is_product(&self) -> bool {
        match self {
            Instance::World(w) => w.prior().is_product(),
            Instance::AnalyticRelease { .. } => true,
        }
    }

    fn n(&self) -> usize {
        match self {
            Instance::World(w) => w.n(),
            Instance::AnalyticRelease { n, .. } => *n,
        }
    }

    fn compression_size(&self) -> Option<usize> {
        match self {
            Instance::World(w) => w.kernel().compression_size(),
            Instance::AnalyticRelease { .. } => Some(1),
        }
    }
}

/// Inputs of an implication check.
///
/// `eps` is the premise ε for the DP, MI, TS and LMI transfers; `delta` is
/// the premise δ for TS and the target δ for the LML and compression transfers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImplicationParams<T> {
    pub eps: T,
    pub delta: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImplicationReport<T> {
    pub theorem: Implication,
    pub premise: NotionCertificate<T>,
    /// ε at which the conclusion is certified.
    pub transferred_eps: T,
    /// δ the conclusion may not exceed.
    pub transferred_delta: T,
    pub conclusion: NotionCertificate<T>,
    pub pass: bool,
}

/// `e^ε − 1 + ε`
pub fn lmi_to_lss_eps<T: Real>(eps: T) -> T {
    eps.exp() - T::one() + eps
}

/// `11·√(m ln(2n/δ)/n)`
pub fn compression_lss_threshold(m: usize, n: usize, delta: f64) -> f64 {
    let n_f = n as f64;
    11.0 * (m as f64 * (2.0 * n_f / delta).ln() / n_f).sqrt()
}

/// Certifies the premise, applies the theorem's parameter transfer and
/// certifies the conclusion at the transferred parameters.
///
/// Premise parameters are the certified minima, so every instance carries a
/// testable premise.
pub fn verify_implication<T: Real>(
    theorem: Implication,
    instance: Instance<'_, T>,
    params: ImplicationParams<T>,
) -> Result<ImplicationReport<T>> {
    let ImplicationParams { eps, delta } = params;
    let tol = T::tolerance();
    let (premise, t_eps, t_delta, conclusion) = match theorem {
        Implication::DpToLmi => {
            if !instance.is_product() {
                return Err(Error::Precondition(
                    "DP implies LMI only under a product prior".into(),
                ));
            }
            let premise = dp_certify(instance.world("DP certification")?, eps)?;
            let d = premise.delta_star.unwrap_or_else(T::zero);
            let conclusion = lmi_certify_induced(&instance.induced()?, eps)?;
            (premise, eps, d, conclusion)
        }
        Implication::MiToLmi => {
            let ind = instance.induced()?;
            let premise = mi_certify_induced(&ind, eps)?;
            let d = premise.delta_star.unwrap_or_else(T::zero);
            (premise, eps, d, lmi_certify_induced(&ind, eps)?)
        }
        Implication::TsToLmi => {
            let premise = ts_certify(instance.world("TS certification")?, eps, delta)?;
            let eta = premise.eta_star.unwrap_or_else(T::zero);
            let conclusion = lmi_certify_induced(&instance.induced()?, eps)?;
            (premise, eps, delta + eta + eta, conclusion)
        }
        Implication::LmlToLmi => {
            if !(delta > T::zero() && delta <= T::one()) {
                return Err(Error::Precondition(format!("requires 0 < δ ≤ 1, got δ = {delta}")));
            }
            let ind = instance.induced()?;
            let premise = lml_certify_induced(&ind)?;
            let l = premise.leakage.unwrap_or_else(T::zero);
            let t_eps = l + (T::one() / delta).ln();
            (premise, t_eps, delta, lmi_certify_induced(&ind, t_eps)?)
        }
        Implication::LmiToLss => {
            let third = T::one() / T::of_usize(3);
            if eps < T::zero() || eps > third {
                return Err(Error::Precondition(format!("requires ε ≤ 1/3, got ε = {eps}")));
            }
            let ind = instance.induced()?;
            let premise = lmi_certify_induced(&ind, eps)?;
            let d = premise.delta_star.unwrap_or_else(T::zero);
            if d > eps + tol {
                return Err(Error::Precondition(format!(
                    "requires δ ≤ ε; certified LMI δ = {d} exceeds ε = {eps}"
                )));
            }
            let t_delta = if d <= T::zero() { T::zero() } else { d / eps };
            let t_eps = lmi_to_lss_eps(eps);
            (premise, t_eps, t_delta, lss_notion_certify(&ind, t_eps)?)
        }
        Implication::CsToLss => {
            if !instance.is_product() {
                return Err(Error::Precondition(
                    "compression implies LSS only under a product prior".into(),
                ));
            }
            let m = instance.compression_size().ok_or_else(|| {
                Error::Precondition("mechanism was not built as a compression scheme".into())
            })?;
            if !(delta > T::zero() && delta <= T::one()) {
                return Err(Error::Precondition(format!("requires 0 < δ ≤ 1, got δ = {delta}")));
            }
            let n = instance.n();
            let d = delta.as_f64();
            let log_term = (2.0 * n as f64 / d).ln();
            if m as f64 > n as f64 / (9.0 * log_term) {
                return Err(Error::Precondition(format!(
                    "requires m ≤ n/(9 ln(2n/δ)) = {:.6}, got m = {m}",
                    n as f64 / (9.0 * log_term)
                )));
            }
            let t_eps = T::of_f64(compression_lss_threshold(m, n, d));
            let ind = instance.induced()?;
            let premise = NotionCertificate {
                notion: super::Notion::Lss,
                eps: None,
                delta: Some(delta),
                delta_star: None,
                eta_star: None,
                leakage: None,
                witness: super::Witness::None,
            };
            (premise, t_eps, delta, lss_notion_certify(&ind, t_eps)?)
        }
    };
    let measured = conclusion.delta_star.unwrap_or_else(T::zero);
    Ok(ImplicationReport {
        theorem,
        premise,
        transferred_eps: t_eps,
        transferred_delta: t_delta,
        pass: measured <= t_delta + tol,
        conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::build_randomized_response;
    use crate::world::{build_world, MechanismKernel, SampleFrame, SamplePrior};

    #[test]
    fn randomized_response_transfers_to_lmi() {
        let d = Domain::numbered(2).unwrap();
        let frame = SampleFrame::new(d.clone(), 2, &Default::default()).unwrap();
        let prior = SamplePrior::product(FiniteDist::bernoulli(0.3).unwrap());
        let k = build_randomized_response(&frame, &[0, 1], 0.25).unwrap();
        let w = build_world(d, 2, prior, k).unwrap();
        let r = verify_implication(
            Implication::DpToLmi,
            Instance::World(&w),
            ImplicationParams { eps: 3f64.ln(), delta: 0.0 },
        )
        .unwrap();
        assert!(r.transferred_delta < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn constant_mechanism_passes_everything() {
        let d = Domain::numbered(2).unwrap();
        let frame = SampleFrame::new(d.clone(), 2, &Default::default()).unwrap();
        let prior = SamplePrior::product(FiniteDist::uniform(d.space().clone()));
        let w = build_world(d, 2, prior, MechanismKernel::constant(&frame)).unwrap();
        for th in Implication::ALL {
            if th == Implication::CsToLss {
                continue;
            }
            let r = verify_implication(th, Instance::World(&w), ImplicationParams { eps: 0.0, delta: 0.5 })
                .unwrap();
            assert!(r.pass, "{th:?}");
            assert_eq!(r.conclusion.delta_star, Some(0.0));
        }
    }

    #[test]
    fn side_conditions_enforced() {
        let d = Domain::numbered(2).unwrap();
        let frame = SampleFrame::new(d.clone(), 2, &Default::default()).unwrap();
        let prior = SamplePrior::product(FiniteDist::uniform(d.space().clone()));
        let w = build_world(d, 2, prior.to_explicit(&frame), MechanismKernel::constant(&frame)).unwrap();
        let p = ImplicationParams { eps: 0.1, delta: 0.1 };
        assert!(matches!(
            verify_implication(Implication::DpToLmi, Instance::World(&w), p),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            verify_implication(Implication::LmiToLss, Instance::World(&w), ImplicationParams { eps: 0.5, delta: 0.0 }),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            verify_implication(Implication::CsToLss, Instance::World(&w), p),
            Err(Error::Precondition(_))
        ));
    }
}
