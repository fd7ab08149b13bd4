//! Efficiency ratios, their analytical bounds and the uniform distancing
//! policy.
//!
//! Worst and best equilibria come from a multi-start search and are only
//! the worst and best *found*; every metric keeps the list of runs that
//! produced it.

mod bounds;
mod distancing;

use serde::{Deserialize, Serialize};

use crate::closed_forms::symmetric_equilibrium;
use crate::error::{Error, Result};
use crate::game_core::{social_welfare, GameParams};
use crate::net_model::{AggregateInvestment, Mode, Network, StrategyProfile};
use crate::solvers::{
    agent_orders, full_profile, multi_start_equilibria, social_optimum, EquilibriumReport, EquilibriumStart,
    OptimumReport,
};

pub use bounds::{
    poa_bound_global, poa_bound_local, pok_bound, symmetric_poa_formula, GlobalPoaBound, LocalPoaBound, PokBound,
    SymmetricPoa,
};
pub use distancing::{
    distancing_matrix, evaluate_policy, optimal_kappa, policy_kkt_residual, DistancingPolicy, KappaSearch,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Random agent orders used when `n > 4`.
    pub random_orders: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { random_orders: 32, seed: 0 }
    }
}

/// Verified equilibria from every start, with the extremes by welfare.
#[derive(Debug, Clone)]
pub struct EquilibriumSearch {
    pub mode: Mode,
    pub worst: EquilibriumReport,
    pub best: EquilibriumReport,
    pub worst_welfare: f64,
    pub best_welfare: f64,
    pub runs: usize,
    pub verified: usize,
    /// One line per run: start, order, status, welfare.
    pub provenance: Vec<String>,
}

/// Closed-form symmetric equilibrium when the instance is a symmetric game
/// on a uniform complete network.
fn closed_form_start(net: &Network, gp: &GameParams) -> Option<StrategyProfile> {
    if !net.is_complete() {
        return None;
    }
    let a = net.weight(0, 1);
    if net.links().iter().any(|l| net.weight(l.k, l.l) != a) {
        return None;
    }
    let sol = symmetric_equilibrium(a, gp).ok()?;
    sol.profile(net).ok()
}

pub fn search_equilibria(net: &Network, gp: &GameParams, mode: Mode, opts: SearchOptions) -> Result<EquilibriumSearch> {
    let gp = gp.with_mode(mode);
    let n = net.n();
    let mut starts = Vec::new();
    let mut labels = Vec::new();
    let inits = [("zero", StrategyProfile::zeros(n)), ("full", full_profile(net)?)];
    for order in agent_orders(n, opts.random_orders, opts.seed) {
        for (name, init) in &inits {
            labels.push(*name);
            starts.push(EquilibriumStart { init: init.clone(), order: order.clone() });
        }
    }
    if let Some(p) = closed_form_start(net, &gp) {
        labels.push("closed-form");
        starts.push(EquilibriumStart { init: p, order: (0..n).collect() });
    }
    let reports = multi_start_equilibria(net, &gp, &starts)?;
    let mut provenance = Vec::with_capacity(reports.len());
    let mut found: Vec<(f64, usize)> = Vec::new();
    for (idx, rep) in reports.iter().enumerate() {
        let w = social_welfare(net, &rep.aggregate(net)?, &gp)?;
        provenance.push(format!(
            "{} order={:?} status={:?} residual={:.3e} welfare={w}",
            labels[idx], rep.order, rep.status, rep.kkt_residual
        ));
        if rep.is_equilibrium {
            found.push((w, idx));
        }
    }
    if found.is_empty() {
        return Err(Error::NoConvergence(format!("no verified {mode:?} equilibrium in {} runs", reports.len())));
    }
    // First run wins ties, so the selection is deterministic.
    let worst = found.iter().fold(found[0], |acc, x| if x.0 < acc.0 { *x } else { acc });
    let best = found.iter().fold(found[0], |acc, x| if x.0 > acc.0 { *x } else { acc });
    Ok(EquilibriumSearch {
        mode,
        worst: reports[worst.1].clone(),
        best: reports[best.1].clone(),
        worst_welfare: worst.0,
        best_welfare: best.0,
        runs: reports.len(),
        verified: found.len(),
        provenance,
    })
}

/// `|a| / |b|`, or `None` when both vanish.
fn ratio(a: f64, b: f64) -> Option<f64> {
    if b == 0.0 {
        None
    } else {
        Some(a.abs() / b.abs())
    }
}

#[derive(Debug, Clone)]
pub struct PoaResult {
    pub search: EquilibriumSearch,
    pub optimum: OptimumReport,
    /// `None` when the optimum welfare is zero.
    pub poa: Option<f64>,
    pub degenerate: bool,
}

pub fn price_of_anarchy(net: &Network, gp: &GameParams, mode: Mode, opts: SearchOptions) -> Result<PoaResult> {
    let search = search_equilibria(net, gp, mode, opts)?;
    let optimum = social_optimum(net, gp, &AggregateInvestment::zeros(net.n()))?;
    let poa = ratio(search.worst_welfare, optimum.welfare);
    Ok(PoaResult { degenerate: poa.is_none(), search, optimum, poa })
}

#[derive(Debug, Clone)]
pub struct PokResult {
    pub local: EquilibriumSearch,
    pub global: EquilibriumSearch,
    pub pok: Option<f64>,
    pub degenerate: bool,
    /// The theorem's bound, or why its hypotheses failed.
    pub bound: std::result::Result<PokBound, String>,
}

pub fn price_of_autarky(net: &Network, gp: &GameParams, opts: SearchOptions) -> Result<PokResult> {
    let local = search_equilibria(net, gp, Mode::Local, opts)?;
    let global = search_equilibria(net, gp, Mode::Global, opts)?;
    let pok = ratio(local.worst_welfare, global.best_welfare);
    let bound = pok_bound(net, gp, &local.worst, &global.best).map_err(|e| e.to_string());
    Ok(PokResult { degenerate: pok.is_none(), local, global, pok, bound })
}

#[derive(Debug, Clone)]
pub struct WelfareMetrics {
    pub welfare_worst_local: f64,
    pub welfare_worst_global: f64,
    pub welfare_best_global: f64,
    pub welfare_optimum: f64,
    pub poa_local: Option<f64>,
    pub poa_global: Option<f64>,
    pub pok: Option<f64>,
    pub optimum_converged: bool,
    pub global_bound: std::result::Result<GlobalPoaBound, String>,
    pub local_bound: std::result::Result<LocalPoaBound, String>,
    pub pok_bound: std::result::Result<PokBound, String>,
    pub provenance: Vec<String>,
}

/// Every ratio and bound of one instance.
pub fn welfare_metrics(net: &Network, gp: &GameParams, opts: SearchOptions) -> Result<WelfareMetrics> {
    let pok = price_of_autarky(net, gp, opts)?;
    let optimum = social_optimum(net, gp, &AggregateInvestment::zeros(net.n()))?;
    let global_bound = poa_bound_global(net, gp, &pok.global.worst, &optimum).map_err(|e| e.to_string());
    let local_bound = poa_bound_local(net, gp, &pok.local.worst, &optimum).map_err(|e| e.to_string());
    let mut provenance: Vec<String> = pok.local.provenance.iter().map(|s| format!("local {s}")).collect();
    provenance.extend(pok.global.provenance.iter().map(|s| format!("global {s}")));
    Ok(WelfareMetrics {
        welfare_worst_local: pok.local.worst_welfare,
        welfare_worst_global: pok.global.worst_welfare,
        welfare_best_global: pok.global.best_welfare,
        welfare_optimum: optimum.welfare,
        poa_local: ratio(pok.local.worst_welfare, optimum.welfare),
        poa_global: ratio(pok.global.worst_welfare, optimum.welfare),
        pok: pok.pok,
        optimum_converged: optimum.converged,
        global_bound,
        local_bound,
        pok_bound: pok.bound,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_quiet_agents_are_degenerate() {
        let net = Network::complete(3, 1.0).unwrap();
        let mut gp = GameParams::symmetric(3, 1.0, 1.0, 1.0, 0.3, 1.0, Mode::Global).unwrap();
        gp.delta = vec![0.0; 3];
        let r = price_of_anarchy(&net, &gp, Mode::Global, SearchOptions::default()).unwrap();
        assert!(r.degenerate && r.poa.is_none());
    }

    #[test]
    fn identical_outcomes_give_one() {
        let net = Network::complete(3, 1.0).unwrap();
        let gp = GameParams::symmetric(3, 1.0, 1.0, 1.0, 0.3, 100.0, Mode::Global).unwrap();
        let r = price_of_anarchy(&net, &gp, Mode::Local, SearchOptions::default()).unwrap();
        assert_eq!(r.poa, Some(1.0));
        assert_eq!(r.search.runs, 13);
    }
}
