use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::ascent::projected_ascent;
use super::{classify, complementarity, link_case, LinkCase, OptimumReport, KKT_TOL, MAX_ASCENT_ITER, PG_TOL};
use crate::error::Result;
use crate::game_core::{social_welfare, GameParams, KernelEval};
use crate::net_model::{AggregateInvestment, Link, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumVerdict {
    pub is_optimum: bool,
    pub residual: f64,
    pub per_link_cases: BTreeMap<Link, LinkCase>,
}

/// Per-link KKT check with the sum of all agents' marginal utilities.
pub fn verify_social_optimum(net: &Network, aggregate: &AggregateInvestment, gp: &GameParams) -> Result<OptimumVerdict> {
    gp.check_dim(net)?;
    let eval = KernelEval::from_aggregate(net, aggregate, gp)?;
    let mut residual = 0.0f64;
    let mut cases = BTreeMap::new();
    for link in net.links() {
        let gap = (eval.marginal_sum(link) - gp.rho) / gp.rho;
        residual = residual.max(complementarity(aggregate.on_link(link), net.weight(link.k, link.l), gap));
        cases.insert(link, link_case(gap));
    }
    Ok(OptimumVerdict { is_optimum: residual <= KKT_TOL, residual, per_link_cases: cases })
}

/// Projected ascent on the aggregate link variables with field
/// `sum_i m_i - rho`.
pub fn social_optimum(net: &Network, gp: &GameParams, init: &AggregateInvestment) -> Result<OptimumReport> {
    gp.check_dim(net)?;
    let init = AggregateInvestment::new(init.matrix().clone(), net)?;
    let n = net.n();
    let links = net.links();
    let caps: Vec<f64> = links.iter().map(|l| net.weight(l.k, l.l)).collect();
    let x0: Vec<f64> = links.iter().map(|&l| init.on_link(l)).collect();
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
        let residual = DMatrix::from_fn(n, n, |r, c| (net.weight(r, c) - d[(r, c)]).max(0.0));
        let eval = KernelEval::new(gp, &residual)?;
        Ok(links.iter().map(|&l| eval.marginal_sum(l) - gp.rho).collect())
    };
    let out = projected_ascent(&x0, &caps, field, PG_TOL, MAX_ASCENT_ITER)?;
    let aggregate = AggregateInvestment::new(build(&out.x), net)?;
    let verdict = verify_social_optimum(net, &aggregate, gp)?;
    let welfare = social_welfare(net, &aggregate, gp)?;
    Ok(OptimumReport {
        classification: classify(&verdict.per_link_cases, false),
        aggregate,
        kkt_residual: verdict.residual,
        per_link_cases: verdict.per_link_cases,
        is_optimum: verdict.is_optimum,
        converged: out.converged,
        iterations: out.iterations,
        welfare,
    })
}
