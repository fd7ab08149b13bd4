use std::collections::{BTreeMap, VecDeque};

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ascent::projected_ascent;
use super::{
    verify_equilibrium, Classification, EquilibriumReport, SolveStatus, AGGREGATE_TOL, MAX_ASCENT_ITER, MAX_SWEEPS,
    PG_TOL,
};
use crate::error::{Error, Result};
use crate::game_core::{GameParams, KernelEval};
use crate::net_model::{
    localize_profile, AggregateInvestment, Link, Mode, Network, StrategyProfile, FEASIBILITY_TOL,
};

#[derive(Debug, Clone)]
pub struct BestResponse {
    pub matrix: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub pg_norm: f64,
}

/// Every link fully suppressed, split between its endpoints. Valid in both
/// modes.
pub fn full_profile(net: &Network) -> Result<StrategyProfile> {
    let elig: BTreeMap<Link, Vec<usize>> = net.links().into_iter().map(|l| (l, vec![l.k, l.l])).collect();
    localize_profile(&AggregateInvestment::full(net), &elig, Mode::Local)
}

fn check_others(net: &Network, others: &DMatrix<f64>) -> Result<()> {
    let n = net.n();
    if others.nrows() != n || others.ncols() != n {
        return Err(Error::Dimension { expected: n, got: others.nrows() });
    }
    for i in 0..n {
        for j in 0..n {
            let (v, a) = (others[(i, j)], net.weight(i, j));
            if v < -FEASIBILITY_TOL || !v.is_finite() {
                return Err(Error::Negative { i, j, value: v });
            }
            if v - a > FEASIBILITY_TOL * a.max(1.0) {
                return Err(Error::Infeasible { i, j, excess: v - a });
            }
        }
    }
    Ok(())
}

/// Best response of agent `i` to the others' total investment, from zero.
pub fn best_response(net: &Network, others: &DMatrix<f64>, gp: &GameParams, i: usize) -> Result<BestResponse> {
    best_response_from(net, others, gp, i, &DMatrix::zeros(net.n(), net.n()))
}

/// Best response warm-started at `start`, which is clipped into the box.
pub fn best_response_from(
    net: &Network,
    others: &DMatrix<f64>,
    gp: &GameParams,
    i: usize,
    start: &DMatrix<f64>,
) -> Result<BestResponse> {
    gp.check_dim(net)?;
    check_others(net, others)?;
    let n = net.n();
    if i >= n {
        return Err(Error::Param(format!("agent {i} out of range")));
    }
    let links: Vec<Link> = net.links().into_iter().filter(|l| gp.mode == Mode::Global || l.touches(i)).collect();
    let caps: Vec<f64> = links.iter().map(|l| (net.weight(l.k, l.l) - others[(l.k, l.l)]).max(0.0)).collect();
    let x0: Vec<f64> = links.iter().map(|l| start[(l.k, l.l)]).collect();
    let build = |x: &[f64]| {
        let mut d = DMatrix::zeros(n, n);
        for (l, &v) in links.iter().zip(x) {
            d[(l.k, l.l)] = v;
            d[(l.l, l.k)] = v;
        }
        d
    };
    let field = |x: &[f64]| -> Result<Vec<f64>> {
        let d = build(x);
        let residual = DMatrix::from_fn(n, n, |r, c| (net.weight(r, c) - others[(r, c)] - d[(r, c)]).max(0.0));
        let eval = KernelEval::new(gp, &residual)?;
        Ok(links.iter().map(|&l| eval.marginal(i, l) - gp.rho).collect())
    };
    let mut out = projected_ascent(&x0, &caps, field, PG_TOL, MAX_ASCENT_ITER)?;
    // A warm start can sit in a region where the residual cannot be reduced.
    if !out.converged && x0.iter().any(|&v| v != 0.0) {
        let fresh = projected_ascent(&vec![0.0; x0.len()], &caps, field, PG_TOL, MAX_ASCENT_ITER)?;
        if fresh.pg_norm < out.pg_norm {
            out = fresh;
        }
    }
    Ok(BestResponse { matrix: build(&out.x), iterations: out.iterations, converged: out.converged, pg_norm: out.pg_norm })
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(Error::Param(format!("order {order:?} is not a permutation of 0..{n}")));
        }
        seen[i] = true;
    }
    if order.len() != n {
        return Err(Error::Param(format!("order {order:?} is not a permutation of 0..{n}")));
    }
    Ok(())
}

/// Largest entry change between two profiles, over every agent.
fn profile_distance(a: &StrategyProfile, b: &StrategyProfile) -> f64 {
    a.agents().iter().zip(b.agents()).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

/// Cyclic best-response iteration in `order` until no agent's investment
/// moves by more than 1e-8 over a sweep, then verified. Watching only the
/// aggregate is not enough: on capped links shares can drift between agents
/// while the total stays put.
pub fn find_equilibrium(
    net: &Network,
    gp: &GameParams,
    init: &StrategyProfile,
    order: &[usize],
) -> Result<EquilibriumReport> {
    gp.check_dim(net)?;
    init.check_mode(net, gp.mode)?;
    check_order(order, net.n())?;
    let mut profile = init.clone();
    let mut history: VecDeque<StrategyProfile> = VecDeque::from([profile.clone()]);
    let mut status = SolveStatus::IterationLimit;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for &i in order {
            let others = profile.others(i);
            let br = best_response_from(net, &others, gp, i, profile.agent(i))?;
            profile.set_agent(i, br.matrix);
        }
        let last = history.back().expect("history is never empty");
        if profile_distance(&profile, last) <= AGGREGATE_TOL {
            status = SolveStatus::Converged;
            break;
        }
        let len = history.len();
        if let Some(period) =
            (2..=8usize).find(|&p| p <= len && profile_distance(&profile, &history[len - p]) <= 0.1 * AGGREGATE_TOL)
        {
            status = SolveStatus::Oscillation { period };
            break;
        }
        history.push_back(profile.clone());
        if history.len() > 8 {
            history.pop_front();
        }
    }
    let verdict = verify_equilibrium(net, &profile, gp)?;
    Ok(EquilibriumReport::from_verdict(profile, verdict, status, sweeps, order.to_vec()))
}

/// Moves shares of each link among its eligible agents; the aggregate and
/// hence every marginal utility is unchanged.
pub fn reallocate_investments(
    net: &Network,
    eq: &EquilibriumReport,
    gp: &GameParams,
    target: &StrategyProfile,
) -> Result<EquilibriumReport> {
    target.check_mode(net, gp.mode)?;
    let before = eq.profile.total();
    let after = target.total();
    for link in net.links() {
        let (k, l) = (link.k, link.l);
        let a = net.weight(k, l);
        if (before[(k, l)] - after[(k, l)]).abs() > FEASIBILITY_TOL * a.max(1.0) {
            return Err(Error::Param(format!("target changes the aggregate on link {link}")));
        }
        let elig = eq.eligible_sets.get(&link).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(j) = (0..net.n()).find(|&j| target.on_link(j, link) > 0.0 && !elig.contains(&j)) {
            return Err(Error::Hypothesis(format!("agent {j} is not eligible on link {link}")));
        }
    }
    let verdict = verify_equilibrium(net, target, gp)?;
    Ok(EquilibriumReport::from_verdict(target.clone(), verdict, SolveStatus::Converged, 0, eq.order.clone()))
}

/// Equilibrium of the game on `net_tilde` carrying the same residual
/// network as `eq` on `net`: the extra weight `A~ - A` is added to the
/// investment and split among each link's eligible agents.
pub fn induced_equilibrium(
    net_tilde: &Network,
    net: &Network,
    eq: &EquilibriumReport,
    gp: &GameParams,
) -> Result<EquilibriumReport> {
    if !matches!(
        eq.classification,
        Classification::FullInvestment | Classification::Interior | Classification::HomogeneousInterior
    ) {
        return Err(Error::Hypothesis(format!("equilibrium is classified {:?}", eq.classification)));
    }
    if !eq.is_equilibrium {
        return Err(Error::Hypothesis("input profile is not a verified equilibrium".into()));
    }
    let n = net.n();
    if net_tilde.n() != n {
        return Err(Error::Dimension { expected: n, got: net_tilde.n() });
    }
    let residual = eq.profile.aggregate(net)?.residual(net);
    let mut total = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let (at, r) = (net_tilde.weight(k, l), residual.weight(k, l));
            if at < r - FEASIBILITY_TOL * r.max(1.0) {
                return Err(Error::Hypothesis(format!("new weight on ({k},{l}) is below the residual weight")));
            }
            total[(k, l)] = (at - r).max(0.0);
        }
    }
    let total = AggregateInvestment::new(total, net_tilde)?;
    let profile = localize_profile(&total, &eq.eligible_sets, gp.mode)?;
    let verdict = verify_equilibrium(net_tilde, &profile, gp)?;
    Ok(EquilibriumReport::from_verdict(profile, verdict, SolveStatus::Converged, 0, eq.order.clone()))
}

/// All permutations of the agents for `n <= 4`; otherwise the identity
/// followed by `random` seeded shuffles.
pub fn agent_orders(n: usize, random: usize, seed: u64) -> Vec<Vec<usize>> {
    if n <= 4 {
        return (0..n).permutations(n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![(0..n).collect::<Vec<_>>()];
    for _ in 0..random {
        let mut o: Vec<usize> = (0..n).collect();
        o.shuffle(&mut rng);
        out.push(o);
    }
    out
}

#[derive(Debug, Clone)]
pub struct EquilibriumStart {
    pub init: StrategyProfile,
    pub order: Vec<usize>,
}

/// Runs each start independently, in parallel.
pub fn multi_start_equilibria(
    net: &Network,
    gp: &GameParams,
    starts: &[EquilibriumStart],
) -> Result<Vec<EquilibriumReport>> {
    starts.par_iter().map(|s| find_equilibrium(net, gp, &s.init, &s.order)).collect()
}
