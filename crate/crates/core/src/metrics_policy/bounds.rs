//! Instance-level evaluation of the PoA and PoK bounds, with their
//! hypotheses checked first.

use serde::{Deserialize, Serialize};

use crate::closed_forms::chi;
use crate::error::{Error, Result};
use crate::game_core::{GameParams, KernelEval};
use crate::net_model::{AggregateInvestment, Mode, Network};
use crate::solvers::{
    verify_equilibrium, verify_social_optimum, Classification, EquilibriumReport, LinkCase, OptimumReport, Verdict,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalPoaBound {
    pub bound1: f64,
    pub bound2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPoaBound {
    pub bound1: f64,
    pub bound2: f64,
    /// `K_i` at the equilibrium network.
    pub k_eq: Vec<f64>,
    /// `K_i` with cross terms at `O` and self terms at `A`.
    pub k_free: Vec<f64>,
    /// Largest relative violation of `0 <= lo <= hi` over `i != k`.
    pub sandwich_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PokBound {
    pub pokor: f64,
    pub floor: f64,
    /// Largest relative gap in `rho + alpha delta_i (C_ik - C_ii) = 2 (rho - alpha delta_i C_ii)`.
    pub pok_plus_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPoa {
    pub h: f64,
    pub value: f64,
    pub upper: f64,
}

fn hyp(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

/// `(alpha, beta t_bar (1 - alpha))` on a complete network.
fn homogeneous_complete(net: &Network, gp: &GameParams) -> Result<(f64, f64)> {
    gp.check_dim(net)?;
    let alpha = gp.alpha().ok_or_else(|| hyp("x0 is not homogeneous"))?;
    if !net.is_complete() {
        return Err(hyp("network is not complete"));
    }
    Ok((alpha, gp.bt() * (1.0 - alpha)))
}

fn verified(net: &Network, gp: &GameParams, eq: &EquilibriumReport, mode: Mode) -> Result<Verdict> {
    let v = verify_equilibrium(net, &eq.profile, &gp.with_mode(mode))?;
    if !v.is_equilibrium {
        return Err(hyp(format!("profile is not a verified {mode:?} equilibrium")));
    }
    Ok(v)
}

fn no_full_links(v: &Verdict) -> Result<()> {
    if v.per_link_cases.values().any(|c| *c == LinkCase::Full) {
        return Err(hyp("the equilibrium fully suppresses some link"));
    }
    Ok(())
}

fn optimum_invests(net: &Network, gp: &GameParams, opt: &OptimumReport) -> Result<()> {
    let v = verify_social_optimum(net, &opt.aggregate, gp)?;
    if !v.is_optimum {
        return Err(hyp("aggregate is not a verified social optimum"));
    }
    if v.per_link_cases.values().any(|c| *c == LinkCase::Zero) {
        return Err(hyp("the optimum leaves some link without investment"));
    }
    Ok(())
}

pub fn poa_bound_global(
    net: &Network,
    gp: &GameParams,
    eq: &EquilibriumReport,
    opt: &OptimumReport,
) -> Result<GlobalPoaBound> {
    let (_, c) = homogeneous_complete(net, gp)?;
    no_full_links(&verified(net, gp, eq, Mode::Global)?)?;
    optimum_invests(net, gp, opt)?;
    let n = net.n() as f64;
    let eq_sum = eq.profile.total().sum();
    let bound1 = (n * n / (2.0 * c) + eq_sum) / (n / (2.0 * c) + opt.aggregate.sum());
    let bound2 = n + 2.0 * c / n * net.total_weight();
    Ok(GlobalPoaBound { bound1, bound2 })
}

pub fn poa_bound_local(
    net: &Network,
    gp: &GameParams,
    eq: &EquilibriumReport,
    opt: &OptimumReport,
) -> Result<LocalPoaBound> {
    let (alpha, c) = homogeneous_complete(net, gp)?;
    let n = net.n();
    if n < 3 {
        return Err(hyp("the local bound needs at least three agents"));
    }
    no_full_links(&verified(net, gp, eq, Mode::Local)?)?;
    optimum_invests(net, gp, opt)?;
    let rho = gp.rho;
    let bar = KernelEval::from_profile(net, &eq.profile, gp)?.kernel;
    let free = KernelEval::from_aggregate(net, &AggregateInvestment::zeros(n), gp)?.kernel;
    let bt = gp.bt();
    let mut k_eq = vec![0.0; n];
    let mut k_free = vec![0.0; n];
    let mut violation = 0.0f64;
    for i in 0..n {
        let d = gp.delta[i];
        for k in (0..n).filter(|&k| k != i) {
            k_eq[i] += d * (bar[(i, k)] - bar[(i, i)]);
            k_free[i] += d * (free[(i, k)] - bt);
            let lo = rho + alpha * d * (bar[(i, k)] - bar[(i, i)]);
            let hi = 2.0 * (rho - alpha * d * bar[(i, i)]);
            violation = violation.max(-lo / rho).max((lo - hi) / rho);
        }
    }
    let nf = n as f64;
    let w = (nf - 2.0) * alpha / (nf - 1.0);
    let eq_sum = eq.profile.total().sum();
    let bound1 = ((nf * nf * rho + w * k_eq.iter().sum::<f64>()) / (2.0 * c) + rho * eq_sum)
        / (rho * (nf / (2.0 * c) + opt.aggregate.sum()));
    let bound2 = nf + w / (nf * rho) * k_free.iter().sum::<f64>() + 2.0 * c / nf * net.total_weight();
    Ok(LocalPoaBound { bound1, bound2, k_eq, k_free, sandwich_violation: violation.max(0.0) })
}

/// Lower bound on the PoK from the worst local and best global equilibria.
pub fn pok_bound(
    net: &Network,
    gp: &GameParams,
    worst_local: &EquilibriumReport,
    best_global: &EquilibriumReport,
) -> Result<PokBound> {
    let (alpha, c) = homogeneous_complete(net, gp)?;
    let n = net.n();
    if n < 3 {
        return Err(hyp("the PoK bound needs at least three agents"));
    }
    let local = verified(net, gp, worst_local, Mode::Local)?;
    if local.classification != Classification::HomogeneousInterior {
        return Err(hyp(format!("worst local equilibrium is {:?}", local.classification)));
    }
    no_full_links(&verified(net, gp, best_global, Mode::Global)?)?;
    let rho = gp.rho;
    let bar = KernelEval::from_profile(net, &worst_local.profile, gp)?.kernel;
    let nf = n as f64;
    let self_sum: f64 = (0..n).map(|i| gp.delta[i] * bar[(i, i)]).sum();
    let pokor = ((nf * (nf - 1.0) * rho - (nf - 2.0) * alpha * self_sum) / c + rho * worst_local.profile.total().sum())
        / (rho * (nf * nf / (2.0 * c) + best_global.profile.total().sum()));
    let floor = (nf / c) / (nf * nf / (2.0 * c) + net.total_weight());
    let mut residual = 0.0f64;
    for i in 0..n {
        let d = gp.delta[i];
        for k in (0..n).filter(|&k| k != i) {
            let lhs = rho + alpha * d * (bar[(i, k)] - bar[(i, i)]);
            let rhs = 2.0 * (rho - alpha * d * bar[(i, i)]);
            residual = residual.max((lhs - rhs).abs() / rho);
        }
    }
    Ok(PokBound { pokor, floor, pok_plus_residual: residual })
}

/// Closed-form PoA of the symmetric game on a uniform complete network,
/// evaluated at the given equilibrium and optimum.
pub fn symmetric_poa_formula(
    net: &Network,
    gp: &GameParams,
    eq: &EquilibriumReport,
    opt: &OptimumReport,
) -> Result<SymmetricPoa> {
    let (alpha, c) = homogeneous_complete(net, gp)?;
    let delta = gp.common_delta().ok_or_else(|| hyp("delta is not homogeneous"))?;
    let n = net.n();
    if n < 3 {
        return Err(hyp("the symmetric PoA formula needs at least three agents"));
    }
    let a = net.weight(0, 1);
    if net.links().iter().any(|l| net.weight(l.k, l.l) != a) {
        return Err(hyp("network weights are not uniform"));
    }
    let base = delta * gp.bt() * alpha;
    let r = gp.rho / base;
    if !(r > 2.0 && r < chi(c * a, n)?.1) {
        return Err(hyp(format!("rho / (delta beta t_bar alpha) = {r} is outside the band")));
    }
    let agg = eq.profile.aggregate(net)?;
    let h = c * (a - agg.matrix()[(0, 1)]);
    let nf = n as f64;
    let rho = gp.rho;
    let value = (nf * nf * rho / (2.0 * c) - nf * (nf - 2.0) * delta * alpha * (-h).exp() / (2.0 * (1.0 - alpha))
        + rho * agg.sum())
        / (nf * rho / (2.0 * c) + rho * opt.aggregate.sum());
    let upper = nf - (nf - 2.0) * base * (-h).exp() / rho + 2.0 * c / nf * net.total_weight();
    Ok(SymmetricPoa { h, value, upper })
}
