//! Agnostic and transfer variants of the CoT information.

use cotlearn::cotinfo::{agnostic_info, class_pair_stats, info_curve, transfer_info_curve, ExactBudget};
use cotlearn::dfa::{connectivity_bound, connectivity_radius, enumerate_dfa_class, reference_target};
use cotlearn::model::{
    CotDataset, Example, FiniteDistribution, HypothesisClass, InputSeq, JointDistribution, SubClass, Token,
};
use cotlearn::rules::{pick, Rule};
use cotlearn::synthetic::build_product;
use cotlearn::ExtReal;

#[test]
fn realizable_agnostic_info_is_min_cot_risk_over_far_members() {
    let t = reference_target();
    let full = enumerate_dfa_class(t.spec().clone()).unwrap();
    let target_id = full.id_of(&t).unwrap();
    let cls = SubClass::new(&full, vec![target_id, 26590, 40637]).unwrap();
    let d = FiniteDistribution::uniform_strings(2, 4).unwrap();
    let joint = JointDistribution::realized_by(&t, &d).unwrap();
    let stats = class_pair_stats(&cls.hypothesis(0), &cls, &d, ExactBudget::default()).unwrap();
    let mut eps: Vec<f64> = stats.iter().map(|s| s.d_ete).collect();
    eps.extend([0.0, 0.01, 0.3, 0.99]);
    for e in eps {
        // non-strict constraint: members at exactly d_ete = e count
        let expected = stats
            .iter()
            .filter(|s| s.d_ete >= e)
            .map(|s| s.cot_risk)
            .fold(f64::INFINITY, f64::min);
        let got = agnostic_info(&cls, &joint, e).unwrap();
        assert_eq!(got.min_ete, 0.0);
        assert_eq!(got.min_cot, 0.0);
        if expected.is_finite() {
            assert_eq!(got.value, ExtReal::Finite(expected), "eps {e}");
        } else {
            assert_eq!(got.value, ExtReal::Infinite);
        }
    }
}

fn degenerate() -> (cotlearn::synthetic::ProductClass, JointDistribution) {
    // outputs realizable by the identity map, CoT never matched by any member
    let cls = build_product(
        &[vec![0, 0, 0], vec![1, 1, 1]],
        &[vec![0, 1, 2], vec![0, 0, 0], vec![2, 1, 0]],
    )
    .unwrap();
    let support = (0..3u16)
        .map(|i| {
            (
                Example::cot(
                    InputSeq::from_digits(&[i]),
                    cotlearn::model::CotOutput::new(Token(i as u32), vec![Token(7)]),
                ),
                1.0 / 3.0,
            )
        })
        .collect();
    (cls, JointDistribution::new(support).unwrap())
}

#[test]
fn degenerate_distribution_gives_no_information() {
    let (cls, d) = degenerate();
    // largest excess output risk is 2/3 (the constant-0 map errs on x = 1, 2)
    for e in [0.0, 0.1, 1.0 / 3.0, 0.5, 2.0 / 3.0] {
        let a = agnostic_info(&cls, &d, e).unwrap();
        assert_eq!(a.value, ExtReal::Finite(0.0), "eps {e}");
        assert_eq!(a.min_cot, 1.0);
        assert_eq!(a.min_ete, 0.0);
    }
    assert_eq!(agnostic_info(&cls, &d, 0.7).unwrap().value, ExtReal::Infinite);
    assert_eq!(agnostic_info(&cls, &d, 1.5).unwrap().value, ExtReal::Infinite);
}

#[test]
fn cot_erm_cannot_separate_on_degenerate_data() {
    let (cls, d) = degenerate();
    let s = CotDataset::new(d.support().iter().map(|(e, _)| e.clone()).collect());
    let cot = pick(&Rule::CoTErm, &cls, &s, 0).unwrap();
    assert_eq!(cot.candidate_set_size, cls.cardinality());
    let cons = pick(&Rule::CoTCons, &cls, &s, 0).unwrap();
    assert!(cons.unrealizable);
    // output ERM finds the identity map in both CoT variants
    let ete = pick(&Rule::EtEErm, &cls, &s, 0).unwrap();
    assert_eq!(ete.candidate_set_size, 2);
}

#[test]
fn transfer_with_same_distribution_is_the_plain_curve() {
    let t = reference_target();
    let cls = enumerate_dfa_class(t.spec().clone()).unwrap();
    for n in [3, 6] {
        let d = FiniteDistribution::uniform_strings(2, n).unwrap();
        let plain = info_curve(&t, &cls, &d, ExactBudget::default()).unwrap();
        let transfer = transfer_info_curve(&t, &cls, &d, &d, ExactBudget::default()).unwrap();
        assert_eq!(plain, transfer);
    }
}

#[test]
fn transfer_respects_connectivity_bound() {
    let t = reference_target();
    let ell = connectivity_radius(&t);
    assert_eq!(ell, 2);
    let bound = connectivity_bound(&t, ell).unwrap();
    assert_eq!(bound, 0.125);
    assert!(connectivity_bound(&t, 1).is_err());
    let cls = enumerate_dfa_class(t.spec().clone()).unwrap();
    let train = FiniteDistribution::uniform_strings(2, 5).unwrap();
    for n in [2, 5, 7] {
        let test = FiniteDistribution::uniform_strings(2, n).unwrap();
        let c = transfer_info_curve(&t, &cls, &train, &test, ExactBudget::default()).unwrap();
        let min = c
            .breakpoints
            .iter()
            .map(|b| b.info.to_f64())
            .fold(f64::INFINITY, f64::min);
        assert!(min >= bound, "n={n}: {min}");
    }
}

#[test]
fn training_mass_on_an_uninformative_input_gives_zero_information() {
    let cls = build_product(&[vec![0, 0]], &[vec![0, 0], vec![0, 1]]).unwrap();
    let train = FiniteDistribution::explicit(vec![(InputSeq::from_digits(&[0]), 1.0)]).unwrap();
    let test = FiniteDistribution::uniform_strings(2, 1).unwrap();
    let c = transfer_info_curve(&cls.hypothesis(0), &cls, &train, &test, ExactBudget::default()).unwrap();
    assert_eq!(c.breakpoints.len(), 1);
    assert_eq!(c.breakpoints[0].epsilon, 0.5);
    assert_eq!(c.eval(0.0), ExtReal::Finite(0.0));
    assert_eq!(c.eval(0.49), ExtReal::Finite(0.0));
    assert_eq!(c.eval(0.5), ExtReal::Infinite);
    // the bound I(ε) ≥ ε fails here, as it may under transfer
    assert!(c.eval(0.25).to_f64() < 0.25);
}
