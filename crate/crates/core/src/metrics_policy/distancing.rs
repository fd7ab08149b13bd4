//! Uniform distancing: each agent's interactions rescaled to total `kappa`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_core::{welfare_of_interaction, GameParams, KernelEval};
use crate::net_model::{AggregateInvestment, Network, FEASIBILITY_TOL};
use crate::solvers::social_optimum;

const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DistancingPolicy {
    pub kappa: f64,
    /// `c_ij = kappa a_ij / sum_k a_ik`; not symmetric unless `A` is regular.
    pub matrix: DMatrix<f64>,
}

impl DistancingPolicy {
    /// Investment paid to move from `A` to the policy matrix.
    pub fn invested(&self, net: &Network) -> f64 {
        net.total_weight() - self.matrix.sum()
    }
}

/// Largest admissible level, the smallest row sum.
pub fn max_kappa(net: &Network) -> f64 {
    net.row_sums().into_iter().fold(f64::INFINITY, f64::min)
}

pub fn distancing_matrix(net: &Network, kappa: f64) -> Result<DistancingPolicy> {
    let rows = net.row_sums();
    if let Some(i) = rows.iter().position(|&r| r <= 0.0) {
        return Err(Error::Hypothesis(format!("row {i} of the network sums to zero")));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::Param(format!("kappa must be nonnegative, got {kappa}")));
    }
    let limit = max_kappa(net);
    if kappa > limit * (1.0 + FEASIBILITY_TOL) {
        return Err(Error::Param(format!("kappa = {kappa} exceeds the admissible maximum {limit}")));
    }
    let n = net.n();
    let matrix = DMatrix::from_fn(n, n, |i, j| (kappa * net.weight(i, j) / rows[i]).min(net.weight(i, j)));
    Ok(DistancingPolicy { kappa, matrix })
}

/// Social welfare with interactions `C(A, kappa)` and `A - C` paid for.
pub fn evaluate_policy(net: &Network, kappa: f64, gp: &GameParams) -> Result<f64> {
    let p = distancing_matrix(net, kappa)?;
    welfare_of_interaction(gp, &p.matrix, p.invested(net))
}

/// Social-optimum KKT residual at the policy point, with the sum of
/// marginal utilities read off the policy's interaction matrix.
pub fn policy_kkt_residual(net: &Network, kappa: f64, gp: &GameParams) -> Result<f64> {
    let p = distancing_matrix(net, kappa)?;
    let eval = KernelEval::new(gp, &p.matrix)?;
    let mut residual = 0.0f64;
    for link in net.links() {
        let a = net.weight(link.k, link.l);
        let x = a - 0.5 * (p.matrix[(link.k, link.l)] + p.matrix[(link.l, link.k)]);
        let gap = (eval.marginal_sum(link) - gp.rho) / gp.rho;
        residual = residual.max((x - (x + gap * a).clamp(0.0, a)).abs() / a);
    }
    Ok(residual)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSearch {
    pub kappa: f64,
    pub residual: f64,
    pub welfare: f64,
    pub optimum_welfare: f64,
    /// Optimum welfare minus policy welfare.
    pub epsilon_gap: f64,
    /// `(kappa, welfare, residual)` on the coarse grid.
    pub sweep: Vec<(f64, f64, f64)>,
}

fn golden_section<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > GOLDEN_TOL * hi.abs().max(1.0) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Level whose policy point best satisfies the social-optimum conditions:
/// the minimum of the KKT residual on a grid of `points` levels, refined by
/// golden section. Level 0 is kept when it already satisfies them.
pub fn optimal_kappa(net: &Network, gp: &GameParams, points: usize) -> Result<KappaSearch> {
    if gp.alpha().is_none() || gp.common_delta().is_none() {
        return Err(Error::Hypothesis("distancing needs a symmetric game".into()));
    }
    if points < 3 {
        return Err(Error::Param("the kappa grid needs at least 3 points".into()));
    }
    let kmax = max_kappa(net);
    let mut sweep = Vec::with_capacity(points);
    for s in 0..points {
        let k = kmax * s as f64 / (points - 1) as f64;
        sweep.push((k, evaluate_policy(net, k, gp)?, policy_kkt_residual(net, k, gp)?));
    }
    let best = (0..points).fold(0, |b, j| if sweep[j].2 < sweep[b].2 { j } else { b });
    let kappa = if best == 0 && sweep[0].2 <= crate::solvers::KKT_TOL {
        0.0
    } else {
        let lo = sweep[best.saturating_sub(1)].0;
        let hi = sweep[(best + 1).min(points - 1)].0;
        golden_section(|k| policy_kkt_residual(net, k, gp), lo, hi)?
    };
    let welfare = evaluate_policy(net, kappa, gp)?;
    let optimum = social_optimum(net, gp, &AggregateInvestment::zeros(net.n()))?;
    Ok(KappaSearch {
        kappa,
        residual: policy_kkt_residual(net, kappa, gp)?,
        welfare,
        optimum_welfare: optimum.welfare,
        epsilon_gap: optimum.welfare - welfare,
        sweep,
    })
}
