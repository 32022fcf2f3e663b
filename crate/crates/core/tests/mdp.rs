#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use proptest::prelude::*;
use shieldspi::mdp::{
    exact_reach_avoid, optimal_policy, performance, policy_evaluation, Mdp, MdpBuilder,
    TabularPolicy,
};

#[test]
fn policy_evaluation_matches_dense_solve() {
    let mut r = rng(11);
    for _ in 0..30 {
        let n = 2 + (rand::Rng::gen_range(&mut r, 0..8));
        let mdp = random_mdp(&mut r, n, 3, 0.9);
        let pi = random_policy(&mut r, &mdp);
        let got = policy_evaluation(&mdp, &pi, 1e-12).unwrap();
        let want = dense_policy_value(&mdp, &pi);
        for s in 0..n {
            approx::assert_abs_diff_eq!(got.v(s), want[s], epsilon = 1e-9);
        }
    }
}

#[test]
fn optimal_policy_beats_every_deterministic_policy() {
    let mut r = rng(12);
    for _ in 0..20 {
        let mdp = random_mdp(&mut r, 4, 3, 0.9);
        let (pi, values) = optimal_policy(&mdp, 1e-12).unwrap();
        let best = all_deterministic(&mdp)
            .into_iter()
            .map(|acts| {
                let p = TabularPolicy::deterministic(mdp.shape(), &acts).unwrap();
                dense_policy_value(&mdp, &p)
            })
            .fold(vec![f64::NEG_INFINITY; 4], |acc, v| {
                acc.iter().zip(&v).map(|(a, b)| a.max(*b)).collect()
            });
        for s in 0..4 {
            approx::assert_abs_diff_eq!(values.v(s), best[s], epsilon = 1e-8);
        }
        assert!(pi.deterministic_action(0).is_some());
    }
}

#[test]
fn three_state_reach_avoid_example() {
    // a: target 0.7, unsafe 0.3; b: target 0.4, stay 0.6.
    let mut b = MdpBuilder::new(3, 2, 0.95, 0);
    b.transition(0, 0, 1, 0.7).transition(0, 0, 2, 0.3);
    b.transition(0, 1, 1, 0.4).transition(0, 1, 0, 0.6);
    b.transition(1, 0, 1, 1.0).transition(2, 0, 2, 1.0);
    b.target(1).unsafe_state(2);
    let mdp = b.build().unwrap();
    let oracle = all_deterministic(&mdp)
        .iter()
        .map(|acts| dense_reach_probability(&mdp, acts)[0])
        .fold(f64::NEG_INFINITY, f64::max);
    // Action b never risks the unsafe state and reaches the target surely.
    approx::assert_abs_diff_eq!(oracle, 1.0, epsilon = 1e-12);
    let got = exact_reach_avoid(&mdp).unwrap();
    approx::assert_abs_diff_eq!(got.v(0), oracle, epsilon = 1e-9);
    approx::assert_abs_diff_eq!(got.q(0, 0), 0.7, epsilon = 1e-9);
}

#[test]
fn reach_avoid_matches_policy_enumeration() {
    let mut r = rng(13);
    for _ in 0..40 {
        let mdp = random_reach_avoid_mdp(&mut r, 4, 2);
        let got = exact_reach_avoid(&mdp).unwrap();
        let policies = all_deterministic(&mdp);
        for s in 0..mdp.num_states() {
            let best = policies
                .iter()
                .map(|acts| dense_reach_probability(&mdp, acts)[s])
                .fold(f64::NEG_INFINITY, f64::max);
            approx::assert_abs_diff_eq!(got.v(s), best, epsilon = 1e-7);
        }
    }
}

#[test]
fn text_round_trip_preserves_values() {
    let mut r = rng(14);
    let mdp = random_mdp(&mut r, 6, 2, 0.8);
    let again = Mdp::<f64>::parse_text(&mdp.to_text()).unwrap();
    let pi = random_policy(&mut r, &mdp);
    approx::assert_abs_diff_eq!(
        performance(&mdp, &pi).unwrap(),
        performance(&again, &pi).unwrap(),
        epsilon = 1e-12
    );
}

#[test]
fn f32_and_f64_agree() {
    let mut r = rng(15);
    let mdp = random_mdp(&mut r, 5, 2, 0.9);
    let pi = random_policy(&mut r, &mdp);
    let v64 = performance(&mdp, &pi).unwrap();
    let v32 = performance(&mdp.cast::<f32>(), &pi.cast::<f32>()).unwrap();
    assert!((v64 - f64::from(v32)).abs() < 1e-3, "{v64} vs {v32}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimal_dominates_random_policies(seed in any::<u64>(), n in 2usize..7, m in 1usize..4) {
        let mut r = rng(seed);
        let mdp = random_mdp(&mut r, n, m, 0.9);
        let (pi, values) = optimal_policy(&mdp, 1e-10).unwrap();
        prop_assert!(pi.validate_for(mdp.shape()).is_ok());
        let other = random_policy(&mut r, &mdp);
        let v = policy_evaluation(&mdp, &other, 1e-10).unwrap();
        for s in 0..n {
            prop_assert!(values.v(s) >= v.v(s) - 1e-7);
        }
    }

    #[test]
    fn reach_avoid_values_are_probabilities(seed in any::<u64>(), interior in 1usize..6) {
        let mut r = rng(seed);
        let mdp = random_reach_avoid_mdp(&mut r, interior, 2);
        let t = exact_reach_avoid(&mdp).unwrap();
        for s in 0..mdp.num_states() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&t.v(s)));
            // Value iteration approaches the fixed point from below.
            for &a in mdp.available(s) {
                prop_assert!(t.q(s, a) <= t.v(s) + 1e-7);
            }
        }
        prop_assert_eq!(t.v(interior), 1.0);
        prop_assert_eq!(t.v(interior + 1), 0.0);
    }
}
