#![allow(dead_code)]

use std::collections::BTreeMap;

use epinet::dynamics::EpidemicParams;
use epinet::game_core::GameParams;
use epinet::net_model::{Link, Mode, Network, StrategyProfile};
use epinet::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random connected network: a random spanning tree plus extra edges with
/// probability `p`, weights in `[0.2, 1.5)`.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Network {
    let mut w = DMatrix::zeros(n, n);
    for j in 1..n {
        let i = rng.gen_range(0..j);
        let v = rng.gen_range(0.2..1.5);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        for j in i + 1..n {
            if w[(i, j)] == 0.0 && rng.gen::<f64>() < p {
                let v = rng.gen_range(0.2..1.5);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    Network::new(w).unwrap()
}

pub fn random_epidemic(rng: &mut ChaCha8Rng, n: usize) -> EpidemicParams {
    let x0 = (0..n).map(|_| rng.gen_range(0.01..0.5)).collect();
    EpidemicParams::new(rng.gen_range(0.2..1.5), rng.gen_range(0.3..2.0), x0).unwrap()
}

pub fn random_game(rng: &mut ChaCha8Rng, n: usize, mode: Mode) -> GameParams {
    let delta = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    GameParams::new(delta, random_epidemic(rng, n), rng.gen_range(0.2..1.0), mode).unwrap()
}

/// Feasible profile with each link's random total split among random agents
/// allowed by `mode`.
pub fn random_profile(rng: &mut ChaCha8Rng, net: &Network, mode: Mode) -> StrategyProfile {
    let n = net.n();
    let mut per = vec![DMatrix::zeros(n, n); n];
    for link in net.links() {
        let a = net.weight(link.k, link.l);
        let investors = link.investors(n, mode);
        let mut left = a * rng.gen_range(0.0..0.9);
        for (idx, &i) in investors.iter().enumerate() {
            let d = if idx + 1 == investors.len() { left } else { left * rng.gen::<f64>() };
            left -= d;
            per[i][(link.k, link.l)] = d;
            per[i][(link.l, link.k)] = d;
        }
    }
    StrategyProfile::new(per).unwrap()
}

/// Profile with link totals from `totals` and shares from `shares`.
pub fn profile_from_shares(n: usize, shares: &BTreeMap<Link, Vec<(usize, f64)>>) -> StrategyProfile {
    let mut per = vec![DMatrix::zeros(n, n); n];
    for (link, parts) in shares {
        for &(i, d) in parts {
            per[i][(link.k, link.l)] += d;
            per[i][(link.l, link.k)] += d;
        }
    }
    StrategyProfile::new(per).unwrap()
}
