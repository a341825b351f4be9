//! Adaptive interaction between an analyst and a sequence of mechanisms:
//! exact view enumeration, view-induced posteriors and composition bounds.

mod analyst;
mod composition;
mod run;

pub use analyst::{Analyst, AnalystSpec, DecisionTable, Round, RuleSpec};
pub use composition::{
    advanced_composition_bound, advanced_composition_check, certify_rounds,
    linear_composition_bound, linear_composition_check, CompositionReport, RoundCertificate,
};
pub use run::{
    run_adaptive, view_loss_decomposition_check, AdaptiveRun, DecompositionReport, Step, ViewNode,
};

#[cfg(test)]
mod tests {
    use num_traits::Zero;

    use super::*;
    use crate::mechanisms::build_element_release;
    use crate::prob::{FiniteDist, Space};
    use crate::scalar::Rational;
    use crate::stability::loss_profile;
    use crate::world::{build_world, induce, Domain, MechanismKernel, SampleFrame, SamplePrior, World};

    fn binary_world(n: usize) -> (World<Rational>, SampleFrame) {
        let d = Domain::numbered(2).unwrap();
        let frame = SampleFrame::new(d.clone(), n, &Default::default()).unwrap();
        let prior = SamplePrior::product(FiniteDist::new(d.space().clone(), vec![Rational::new(1, 3), Rational::new(2, 3)]).unwrap());
        let w = build_world(d, n, prior, MechanismKernel::constant(&frame)).unwrap();
        (w, frame)
    }

    fn bits() -> Space {
        Space::labeled(["0", "1"]).unwrap()
    }

    /// Reveals element `pos` of the tuple.
    fn reveal(frame: &SampleFrame, pos: usize) -> MechanismKernel<Rational> {
        let ts = *frame.tuples();
        MechanismKernel::deterministic(frame, bits(), move |s| ts.decode(s)[pos])
    }

    fn xor(frame: &SampleFrame) -> MechanismKernel<Rational> {
        let ts = *frame.tuples();
        MechanismKernel::deterministic(frame, bits(), move |s| ts.decode(s).iter().sum::<usize>() % 2)
    }

    #[test]
    fn zero_rounds_is_the_prior() {
        let (w, _) = binary_world(2);
        let run = run_adaptive(&w, &Analyst::non_adaptive(Vec::<String>::new()), &[], 0).unwrap();
        assert_eq!(run.final_views().len(), 1);
        assert_eq!(run.final_views()[0].loss, Rational::zero());
        assert_eq!(run.posterior(0, 0).weights(), &w.tuple_weights()[..]);
        let rep = view_loss_decomposition_check(&run);
        assert!(rep.pass && rep.min_slack.is_none());
    }

    #[test]
    fn one_round_matches_induce() {
        let (w, frame) = binary_world(2);
        let k = xor(&frame);
        let run = run_adaptive(&w, &Analyst::non_adaptive(["x"]), &[Round::single("x", k.clone())], 1).unwrap();
        let ind = induce(&w.with_kernel(k).unwrap()).unwrap();
        let prof = loss_profile(&ind);
        for v in run.final_views() {
            let r = v.responses[0];
            assert_eq!(v.mass, ind.marginal_r().prob(r));
            assert_eq!(v.element_posterior.weights(), ind.posterior_elems(r).unwrap().weights());
            assert_eq!(Some(v.loss), prof.loss(r));
        }
    }

    #[test]
    fn switching_analyst_matches_hand_enumeration() {
        // Round 1 reveals s₀. On r₁ = 0 the analyst asks for s₁, otherwise for the parity.
        let (w, frame) = binary_world(2);
        let r1 = Round::single("a", reveal(&frame, 0));
        let r2 = Round::new([("b", reveal(&frame, 1)), ("p", xor(&frame))]).unwrap();
        let an = Analyst::from_table(DecisionTable::fixed(["a", "p"]).rule(None, vec![0], "b"));
        let run = run_adaptive(&w, &an, &[r1, r2], 2).unwrap();

        let third = Rational::new(1, 3);
        let p = |x: usize| if x == 0 { third } else { Rational::new(2, 3) };
        let mut expected = std::collections::BTreeMap::new();
        for s0 in 0..2 {
            for s1 in 0..2 {
                let second = if s0 == 0 { s1 } else { (s0 + s1) % 2 };
                *expected.entry(vec![s0, second]).or_insert(Rational::zero()) += p(s0) * p(s1);
            }
        }
        let got: std::collections::BTreeMap<_, _> =
            run.final_views().iter().map(|v| (v.responses.clone(), v.mass)).collect();
        assert_eq!(got, expected);
        assert_eq!(run.query_path(2, 0), vec!["a", "b"]);
        let rep = view_loss_decomposition_check(&run);
        assert!(rep.pass);
        assert_eq!(rep.product_residual, Rational::zero());
    }

    #[test]
    fn coins_are_prefixed_and_carry_no_loss() {
        let (w, frame) = binary_world(2);
        let r1 = Round::new([("a", reveal(&frame, 0)), ("b", reveal(&frame, 1))]).unwrap();
        let coins = FiniteDist::new(Space::labeled(["h", "t"]).unwrap(), vec![Rational::new(1, 2); 2]).unwrap();
        let an = Analyst::from_table(DecisionTable::fixed(["a"]).rule(Some(1), vec![], "b")).with_coins(coins);
        let run = run_adaptive(&w, &an, &[r1], 1).unwrap();
        assert!(run.level(0).iter().all(|v| v.loss.is_zero()));
        assert_eq!(run.final_views().len(), 4);
        assert_eq!(run.total_mass(1), Rational::from_integer(1));
        assert_eq!(run.view_label(&run.final_views()[3]), "t|1");
    }

    #[test]
    fn constant_rounds_lose_nothing() {
        let (w, frame) = binary_world(2);
        let rounds = vec![Round::single("c", MechanismKernel::constant(&frame)); 3];
        let run = run_adaptive(&w, &Analyst::non_adaptive(["c"; 3]), &rounds, 3).unwrap();
        let rep = view_loss_decomposition_check(&run);
        assert!(rep.pass);
        assert!(run.final_views().iter().all(|v| v.loss.is_zero()));
    }

    #[test]
    fn xor_then_release_chain() {
        let d = Domain::numbered(2).unwrap();
        let frame = SampleFrame::new(d.clone(), 2, &Default::default()).unwrap();
        let prior = SamplePrior::product(FiniteDist::<Rational>::uniform(d.space().clone()));
        let w = build_world(d, 2, prior, MechanismKernel::constant(&frame)).unwrap();
        let rounds = [Round::single("x", xor(&frame)), Round::single("e", build_element_release(&frame).unwrap())];
        let run = run_adaptive(&w, &Analyst::non_adaptive(["x", "e"]), &rounds, 2).unwrap();
        let rep = view_loss_decomposition_check(&run);
        assert!(rep.pass);
        assert_eq!(run.total_mass(2), Rational::from_integer(1));

        // The run as a single mechanism induces the same element posteriors.
        let ind = induce(&run.to_world().unwrap()).unwrap();
        for (i, v) in run.final_views().iter().enumerate() {
            assert_eq!(ind.posterior_elems(i).unwrap().weights(), v.element_posterior.weights());
        }
    }

    #[test]
    fn unknown_query_is_reported() {
        let (w, frame) = binary_world(2);
        let rounds = [Round::single("x", xor(&frame))];
        let err = run_adaptive(&w, &Analyst::non_adaptive(["nope"]), &rounds, 1).unwrap_err();
        assert!(matches!(err, crate::Error::UnknownQuery(_)));
    }

    #[test]
    fn view_budget_is_enforced() {
        let (w, frame) = binary_world(2);
        let w = w.with_budget(crate::world::Budget { max_views: 2, ..Default::default() });
        let rounds = [Round::single("a", reveal(&frame, 0)), Round::single("b", reveal(&frame, 1))];
        let err = run_adaptive(&w, &Analyst::non_adaptive(["a", "b"]), &rounds, 2).unwrap_err();
        assert!(matches!(err, crate::Error::BudgetExceeded { .. }));
    }

    #[test]
    fn linear_composition_on_reveals() {
        let (w, frame) = binary_world(2);
        let rounds = [
            Round::new([("a", reveal(&frame, 0)), ("b", reveal(&frame, 1))]).unwrap(),
            Round::new([("a", reveal(&frame, 0)), ("b", reveal(&frame, 1))]).unwrap(),
        ];
        let an = Analyst::from_table(DecisionTable::fixed(["a", "a"]).rule(None, vec![1], "b"));
        let eps = [Rational::new(1, 10), Rational::new(1, 5)];
        let rep = linear_composition_check(&w, &an, &rounds, &eps).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.rounds[1].family_size, 4);
    }
}
