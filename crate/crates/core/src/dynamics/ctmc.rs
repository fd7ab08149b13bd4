//! Monte Carlo estimates of the exact SI chain.
//!
//! Each infected node `j` fires an independent exponential clock of rate
//! `beta a_ij` towards every susceptible neighbour `i`; by memorylessness
//! this reproduces the aggregate rate `beta sum_j a_ij 1{X_j = 1}`. A sample
//! is therefore a first-passage computation: the infection time of `i` is the
//! earliest `T_j + tau_ji`, processed in event order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EpidemicParams;
use crate::error::{Error, Result};
use crate::net_model::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub seed: u64,
    pub samples: u64,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
}

const CHUNK: u64 = 4096;

/// Stream of sample `index` under `seed`; independent of scheduling.
fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run_sample(net: &Network, params: &EpidemicParams, rng: &mut ChaCha8Rng, infected: &mut [bool]) {
    let n = net.n();
    let mut time = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    for i in 0..n {
        if rng.gen::<f64>() < params.x0[i] {
            time[i] = 0.0;
        }
    }
    loop {
        let mut next = None;
        let mut best = params.t_bar;
        for i in 0..n {
            if !done[i] && time[i] <= best {
                best = time[i];
                next = Some(i);
            }
        }
        let Some(j) = next else { break };
        done[j] = true;
        for i in 0..n {
            let a = net.weight(i, j);
            if done[i] || a <= 0.0 {
                continue;
            }
            let u: f64 = rng.gen();
            let tau = -(1.0 - u).ln() / (params.beta * a);
            if time[j] + tau < time[i] {
                time[i] = time[j] + tau;
            }
        }
    }
    for i in 0..n {
        infected[i] = done[i];
    }
}

/// Estimates `P[X_i(t_bar) = 1]` from `samples` independent runs.
pub fn simulate_exact_ctmc(
    net: &Network,
    params: &EpidemicParams,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    params.check_dim(net)?;
    if samples == 0 {
        return Err(Error::Param("samples must be at least 1".into()));
    }
    let n = net.n();
    let chunks = samples.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; n];
            let mut infected = vec![false; n];
            for s in (c * CHUNK)..((c + 1) * CHUNK).min(samples) {
                let mut rng = sample_rng(seed, s);
                run_sample(net, params, &mut rng, &mut infected);
                for (cnt, &inf) in counts.iter_mut().zip(&infected) {
                    *cnt += inf as u64;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let total = samples as f64;
    let mean: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let std_err = mean.iter().map(|&p| (p * (1.0 - p) / total).sqrt()).collect();
    Ok(MonteCarloEstimate { seed, samples, mean, std_err })
}
