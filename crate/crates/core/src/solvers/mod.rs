//! Best responses, equilibria, social optima and their KKT verification.
//!
//! Verdicts compare link marginal utilities with `rho` on a relative scale:
//! a link is in case (a) when the relevant marginal exceeds `rho (1 + tau)`,
//! case (b) below `rho (1 - tau)`, and case (c) otherwise.

mod ascent;
mod equilibrium;
mod optimum;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game_core::{GameParams, KernelEval};
use crate::net_model::{AggregateInvestment, Link, Network, StrategyProfile};

pub use equilibrium::{
    agent_orders, best_response, best_response_from, find_equilibrium, full_profile, induced_equilibrium,
    multi_start_equilibria, reallocate_investments, BestResponse, EquilibriumStart,
};
pub use optimum::{social_optimum, verify_social_optimum, OptimumVerdict};

pub const KKT_TOL: f64 = 1e-6;
pub const PG_TOL: f64 = 1e-8;
pub const MAX_ASCENT_ITER: usize = 100_000;
pub const AGGREGATE_TOL: f64 = 1e-8;
pub const MAX_SWEEPS: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkCase {
    /// Marginal above `rho`; the link is fully suppressed.
    #[serde(rename = "a")]
    Full,
    /// Marginal below `rho`; nothing is invested.
    #[serde(rename = "b")]
    Zero,
    /// Marginal equal to `rho`.
    #[serde(rename = "c")]
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    FullInvestment,
    NoInvestment,
    Interior,
    HomogeneousInterior,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// The iteration stopped but the KKT check failed.
    Unverified,
    IterationLimit,
    Oscillation { period: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub is_equilibrium: bool,
    pub kkt_residual: f64,
    pub per_link_cases: BTreeMap<Link, LinkCase>,
    pub eligible_sets: BTreeMap<Link, Vec<usize>>,
    pub classification: Classification,
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub profile: StrategyProfile,
    pub kkt_residual: f64,
    pub classification: Classification,
    pub per_link_cases: BTreeMap<Link, LinkCase>,
    pub eligible_sets: BTreeMap<Link, Vec<usize>>,
    pub is_equilibrium: bool,
    pub status: SolveStatus,
    pub sweeps: usize,
    pub order: Vec<usize>,
}

impl EquilibriumReport {
    pub(crate) fn from_verdict(profile: StrategyProfile, v: Verdict, status: SolveStatus, sweeps: usize, order: Vec<usize>) -> Self {
        let status = match status {
            SolveStatus::Converged if !v.is_equilibrium => SolveStatus::Unverified,
            s => s,
        };
        EquilibriumReport {
            profile,
            kkt_residual: v.kkt_residual,
            classification: v.classification,
            per_link_cases: v.per_link_cases,
            eligible_sets: v.eligible_sets,
            is_equilibrium: v.is_equilibrium,
            status,
            sweeps,
            order,
        }
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn aggregate(&self, net: &Network) -> Result<AggregateInvestment> {
        self.profile.aggregate(net)
    }
}

#[derive(Debug, Clone)]
pub struct OptimumReport {
    pub aggregate: AggregateInvestment,
    pub kkt_residual: f64,
    pub classification: Classification,
    pub per_link_cases: BTreeMap<Link, LinkCase>,
    pub is_optimum: bool,
    pub converged: bool,
    pub iterations: usize,
    pub welfare: f64,
}

pub(crate) fn link_case(gap: f64) -> LinkCase {
    if gap > KKT_TOL {
        LinkCase::Full
    } else if gap < -KKT_TOL {
        LinkCase::Zero
    } else {
        LinkCase::Balanced
    }
}

/// Natural complementarity residual in units of the link weight, with the
/// relative gap `(M - rho) / rho` as the field.
pub(crate) fn complementarity(x: f64, a: f64, gap: f64) -> f64 {
    (x - (x + gap * a).clamp(0.0, a)).abs() / a
}

pub(crate) fn classify(cases: &BTreeMap<Link, LinkCase>, homogeneous: bool) -> Classification {
    let mut it = cases.values();
    let Some(first) = it.next() else {
        return Classification::NoInvestment;
    };
    if !it.all(|c| c == first) {
        return Classification::Mixed;
    }
    match first {
        LinkCase::Full => Classification::FullInvestment,
        LinkCase::Zero => Classification::NoInvestment,
        LinkCase::Balanced if homogeneous => Classification::HomogeneousInterior,
        LinkCase::Balanced => Classification::Interior,
    }
}

/// Checks conditions (a)/(b)/(c) on every link against the maximal marginal
/// of the mode's investors, plus condition (2) for every positive share.
pub fn verify_equilibrium(net: &Network, profile: &StrategyProfile, gp: &GameParams) -> Result<Verdict> {
    gp.check_dim(net)?;
    profile.check_mode(net, gp.mode)?;
    let agg = profile.aggregate(net)?;
    let eval = KernelEval::from_aggregate(net, &agg, gp)?;
    let n = net.n();
    let rho = gp.rho;
    let mut residual = 0.0f64;
    let mut cases = BTreeMap::new();
    let mut eligible = BTreeMap::new();
    let mut homogeneous = true;
    for link in net.links() {
        let a = net.weight(link.k, link.l);
        let investors = link.investors(n, gp.mode);
        let marginals: Vec<f64> = investors.iter().map(|&i| eval.marginal(i, link)).collect();
        let m = marginals.iter().fold(f64::NEG_INFINITY, |x, y| x.max(*y));
        let gap = (m - rho) / rho;
        residual = residual.max(complementarity(agg.on_link(link), a, gap));
        for j in 0..n {
            let d = profile.on_link(j, link);
            if d > 0.0 {
                let mj = eval.marginal(j, link);
                residual = residual.max((d / a).min(((rho - mj) / rho).max(0.0)));
            }
        }
        if marginals.iter().any(|&mi| (m - mi) / rho > KKT_TOL) {
            homogeneous = false;
        }
        let elig: Vec<usize> =
            investors.iter().zip(&marginals).filter(|(_, &mi)| (mi - rho) / rho >= -KKT_TOL).map(|(&i, _)| i).collect();
        cases.insert(link, link_case(gap));
        eligible.insert(link, elig);
    }
    let classification = classify(&cases, homogeneous);
    Ok(Verdict {
        is_equilibrium: residual <= KKT_TOL,
        kkt_residual: residual,
        per_link_cases: cases,
        eligible_sets: eligible,
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::Mode;

    #[test]
    fn zero_profile_above_all_marginals() {
        let net = Network::complete(3, 1.0).unwrap();
        let gp = GameParams::symmetric(3, 1.0, 1.0, 1.0, 0.3, 100.0, Mode::Global).unwrap();
        let v = verify_equilibrium(&net, &StrategyProfile::zeros(3), &gp).unwrap();
        assert!(v.is_equilibrium);
        assert_eq!(v.kkt_residual, 0.0);
        assert!(v.per_link_cases.values().all(|c| *c == LinkCase::Zero));
        assert!(v.eligible_sets.values().all(Vec::is_empty));
        assert_eq!(v.classification, Classification::NoInvestment);
    }

    #[test]
    fn full_profile_with_tiny_rho() {
        let net = Network::complete(3, 1.0).unwrap();
        let gp = GameParams::symmetric(3, 1.0, 1.0, 1.0, 0.3, 1e-9, Mode::Local).unwrap();
        let v = verify_equilibrium(&net, &full_profile(&net).unwrap(), &gp).unwrap();
        assert!(v.is_equilibrium);
        assert_eq!(v.classification, Classification::FullInvestment);
    }

    #[test]
    fn zero_profile_fails_when_marginal_is_high() {
        let net = Network::complete(2, 1.0).unwrap();
        let gp = GameParams::symmetric(2, 1.0, 1.0, 1.0, 0.3, 0.1, Mode::Local).unwrap();
        let v = verify_equilibrium(&net, &StrategyProfile::zeros(2), &gp).unwrap();
        assert!(!v.is_equilibrium);
        assert_eq!(v.per_link_cases[&Link::new(0, 1).unwrap()], LinkCase::Full);
        assert!((v.kkt_residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classification_rules() {
        let l1 = Link::new(0, 1).unwrap();
        let l2 = Link::new(1, 2).unwrap();
        let mk = |a, b| BTreeMap::from([(l1, a), (l2, b)]);
        assert_eq!(classify(&mk(LinkCase::Full, LinkCase::Zero), true), Classification::Mixed);
        assert_eq!(classify(&mk(LinkCase::Balanced, LinkCase::Balanced), true), Classification::HomogeneousInterior);
        assert_eq!(classify(&mk(LinkCase::Balanced, LinkCase::Balanced), false), Classification::Interior);
        assert_eq!(classify(&BTreeMap::new(), true), Classification::NoInvestment);
    }
}
