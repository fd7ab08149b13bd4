mod common;

use std::collections::BTreeSet;

use epinet::closed_forms::chi;
use epinet::dynamics::{closed_form_upper_bound, integrate_mean_field, linearized_solution, matrix_exponential};
use epinet::game_core::{
    exact_marginal_utility, homogeneous_derivative_identity, marginal_utility, social_welfare, utility, GameParams,
};
use epinet::net_model::{Mode, Network, StrategyProfile};
use epinet::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `U_i` with agent `i`'s investment on `link` shifted by `eps`.
fn shifted_utility(net: &Network, p: &StrategyProfile, gp: &GameParams, i: usize, k: usize, l: usize, eps: f64) -> f64 {
    let mut per = p.agents().to_vec();
    per[i][(k, l)] += eps;
    per[i][(l, k)] += eps;
    utility(net, &StrategyProfile::new(per).unwrap(), gp, i).unwrap()
}

/// `p` with every agent holding at least `1e-3` on `(k, l)`, so central
/// differences stay inside the feasible set.
fn padded(p: &StrategyProfile, k: usize, l: usize) -> StrategyProfile {
    let mut per = p.agents().to_vec();
    for d in &mut per {
        d[(k, l)] += 1e-3;
        d[(l, k)] += 1e-3;
    }
    StrategyProfile::new(per).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sandwich_holds(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let net = common::random_network(&mut r, n, 0.5);
        let p = common::random_epidemic(&mut r, n);
        let mf = integrate_mean_field(&net, &p, 17).unwrap();
        let ub = closed_form_upper_bound(&net, &p, 17).unwrap().x;
        let lin = linearized_solution(&net, &p, 17).unwrap();
        for k in 0..17 {
            for i in 0..n {
                prop_assert!(mf.values[k][i] <= ub.values[k][i] + 1e-8);
                prop_assert!(ub.values[k][i] <= lin.values[k][i] + 1e-8);
                prop_assert!((0.0..=1.0).contains(&mf.values[k][i]));
            }
        }
    }

    #[test]
    fn chi_matches_exponential(h in 0.0f64..2.0, n in 2usize..7) {
        let hm = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { h });
        let e = matrix_exponential(&hm).unwrap();
        let (d, t) = chi(h, n).unwrap();
        prop_assert!((d - e[(0, 0)]).abs() < 1e-10);
        prop_assert!((t - (e[(0, 0)] + e[(0, 1)])).abs() < 1e-10);
    }

    #[test]
    fn utility_increases_with_investment(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let net = common::random_network(&mut r, n, 0.5);
        let gp = common::random_game(&mut r, n, Mode::Global);
        let p = common::random_profile(&mut r, &net, Mode::Global);
        let link = net.links()[0];
        for i in 0..n {
            let base = utility(&net, &p, &gp, i).unwrap();
            prop_assert!(base <= 0.0);
            prop_assert!(shifted_utility(&net, &p, &gp, i, link.k, link.l, 0.01) >= base - 1e-14);
        }
        let agg = p.aggregate(&net).unwrap();
        prop_assert!(agg.sum() <= net.total_weight() + 1e-12);
        let w = social_welfare(&net, &agg, &gp).unwrap();
        let sum: f64 = (0..n).map(|i| epinet::game_core::payoff(&net, &p, &gp, i).unwrap()).sum();
        prop_assert!((w - sum).abs() <= 1e-10 * w.abs().max(1.0));
    }

    #[test]
    fn exact_marginal_matches_finite_difference(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = Network::complete(4, 1.0).unwrap();
        let gp = common::random_game(&mut r, 4, Mode::Global);
        let (k, l) = (1, 3);
        let p = padded(&common::random_profile(&mut r, &net, Mode::Global), k, l);
        for i in 0..4 {
            let h = 1e-6;
            let fd = (shifted_utility(&net, &p, &gp, i, k, l, h) - shifted_utility(&net, &p, &gp, i, k, l, -h)) / (2.0 * h);
            let ex = exact_marginal_utility(&net, &p, &gp, i, k, l).unwrap();
            prop_assert!((fd - ex).abs() <= 1e-5 * ex.abs().max(1e-3), "{} vs {}", fd, ex);
            prop_assert!(ex >= 0.0);
        }
    }

    #[test]
    fn network_text_round_trips(seed in any::<u64>(), n in 2usize..9) {
        let net = common::random_network(&mut rng(seed), n, 0.4);
        prop_assert_eq!(Network::from_edge_list(&net.to_edge_list()).unwrap(), net.clone());
        prop_assert_eq!(Network::from_csv(&net.to_csv()).unwrap(), net);
    }
}

/// The closed-form marginal drops the non-commuting part of the
/// exponential's derivative, so it only matches on trivial networks.
#[test]
#[ignore = "closed-form marginal differs from the true derivative"]
fn closed_form_marginal_matches_finite_difference() {
    let mut r = rng(3);
    let net = common::random_network(&mut r, 4, 0.6);
    let gp = common::random_game(&mut r, 4, Mode::Global);
    let link = net.links()[0];
    let p = padded(&common::random_profile(&mut r, &net, Mode::Global), link.k, link.l);
    let h = 1e-6;
    let fd = (shifted_utility(&net, &p, &gp, 0, link.k, link.l, h) - shifted_utility(&net, &p, &gp, 0, link.k, link.l, -h))
        / (2.0 * h);
    let m = marginal_utility(&net, &p, &gp, 0, link.k, link.l).unwrap();
    assert!((m - fd).abs() <= 1e-5 * fd.abs(), "{m} vs {fd}");
}

#[test]
#[ignore = "the homogeneous identity holds only for the empty and the full subset"]
fn homogeneous_identity_for_proper_subsets() {
    let mut r = rng(4);
    let net = common::random_network(&mut r, 4, 0.6);
    let gp = GameParams::symmetric(4, 1.0, 1.0, 1.0, 0.3, 0.5, Mode::Global).unwrap();
    let p = common::random_profile(&mut r, &net, Mode::Global);
    let (lhs, rhs) = homogeneous_derivative_identity(&net, &p, &gp, 0, &BTreeSet::from([1])).unwrap();
    assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
}

#[test]
fn homogeneous_identity_for_the_full_subset() {
    let mut r = rng(5);
    let net = common::random_network(&mut r, 4, 0.6);
    let gp = GameParams::symmetric(4, 1.0, 1.0, 1.0, 0.3, 0.5, Mode::Global).unwrap();
    let p = common::random_profile(&mut r, &net, Mode::Global);
    let all: BTreeSet<usize> = (0..4).collect();
    for i in 0..4 {
        let (lhs, rhs) = homogeneous_derivative_identity(&net, &p, &gp, i, &all).unwrap();
        assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}
