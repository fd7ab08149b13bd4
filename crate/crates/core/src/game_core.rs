//! Utilities, costs and marginal utilities of the investment game.
//!
//! With residual network `R = A - sum_i D^i`, `W = diag(1 - x0)` and
//! `b = W^-1 x0`, agent `i`'s utility is `-delta_i [exp(beta t_bar R W) b]_i`.
//! The connectivity kernel is `C = beta t_bar exp(beta t_bar R W)` and the
//! marginal utility of reducing link `{k,l}` is
//! `delta_i (C_ik x0_l + C_il x0_k)`.
//!
//! Link variables follow the symmetric convention: moving one unit of
//! investment on `{k,l}` changes both `d_kl` and `d_lk`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{expm_frechet, matrix_exponential, EpidemicParams};
use crate::error::{Error, Result};
use crate::net_model::{AggregateInvestment, Link, Network, StrategyProfile};

pub use crate::net_model::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub delta: Vec<f64>,
    pub epi: EpidemicParams,
    pub rho: f64,
    pub mode: Mode,
}

impl GameParams {
    pub fn new(delta: Vec<f64>, epi: EpidemicParams, rho: f64, mode: Mode) -> Result<Self> {
        if delta.len() != epi.n() {
            return Err(Error::Dimension { expected: epi.n(), got: delta.len() });
        }
        if let Some(bad) = delta.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            return Err(Error::Param(format!("delta must be nonnegative, got {bad}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Param(format!("rho must be positive, got {rho}")));
        }
        if !(epi.t_bar > 0.0) {
            return Err(Error::Param("the game needs a positive horizon".into()));
        }
        Ok(GameParams { delta, epi, rho, mode })
    }

    /// Symmetric game: common `delta`, common `alpha`.
    pub fn symmetric(n: usize, delta: f64, beta: f64, t_bar: f64, alpha: f64, rho: f64, mode: Mode) -> Result<Self> {
        GameParams::new(vec![delta; n], EpidemicParams::new(beta, t_bar, vec![alpha; n])?, rho, mode)
    }

    pub fn n(&self) -> usize {
        self.delta.len()
    }

    /// `beta * t_bar`.
    pub fn bt(&self) -> f64 {
        self.epi.beta * self.epi.t_bar
    }

    pub fn alpha(&self) -> Option<f64> {
        self.epi.alpha()
    }

    /// Common `delta`, if all agents share it.
    pub fn common_delta(&self) -> Option<f64> {
        let d = self.delta[0];
        self.delta.iter().all(|&x| x == d).then_some(d)
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        GameParams { mode, ..self.clone() }
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        GameParams::new(self.delta.clone(), self.epi.clone(), rho, self.mode)
    }

    pub fn with_t_bar(&self, t_bar: f64) -> Result<Self> {
        GameParams::new(self.delta.clone(), self.epi.with_t_bar(t_bar)?, self.rho, self.mode)
    }

    pub fn x0(&self) -> &[f64] {
        &self.epi.x0
    }

    pub(crate) fn check_dim(&self, net: &Network) -> Result<()> {
        self.epi.check_dim(net)
    }
}

/// Kernel matrix `C` of one residual network.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityKernel {
    pub matrix: DMatrix<f64>,
}

/// The exponential of one residual network and everything read off it.
#[derive(Debug, Clone)]
pub struct KernelEval {
    /// `exp(beta t_bar R W)`.
    pub expo: DMatrix<f64>,
    /// `beta t_bar * expo`.
    pub kernel: DMatrix<f64>,
    /// Per-agent utilities.
    pub utilities: DVector<f64>,
    x0: Vec<f64>,
    delta: Vec<f64>,
}

impl KernelEval {
    /// `residual` need not be symmetric; distancing policies use row-scaled
    /// interaction matrices.
    pub fn new(gp: &GameParams, residual: &DMatrix<f64>) -> Result<Self> {
        let n = gp.n();
        if residual.nrows() != n || residual.ncols() != n {
            return Err(Error::Dimension { expected: n, got: residual.nrows() });
        }
        let x0 = gp.x0();
        let scaled = DMatrix::from_fn(n, n, |i, j| gp.bt() * residual[(i, j)] * (1.0 - x0[j]));
        let expo = matrix_exponential(&scaled)?;
        let b = DVector::from_iterator(n, x0.iter().map(|x| x / (1.0 - x)));
        let eb = &expo * b;
        let utilities = DVector::from_fn(n, |i, _| if gp.delta[i] == 0.0 { 0.0 } else { -gp.delta[i] * eb[i] });
        let kernel = &expo * gp.bt();
        Ok(KernelEval { expo, kernel, utilities, x0: x0.to_vec(), delta: gp.delta.clone() })
    }

    pub fn from_aggregate(net: &Network, agg: &AggregateInvestment, gp: &GameParams) -> Result<Self> {
        gp.check_dim(net)?;
        KernelEval::new(gp, agg.residual(net).weights())
    }

    pub fn from_profile(net: &Network, profile: &StrategyProfile, gp: &GameParams) -> Result<Self> {
        KernelEval::from_aggregate(net, &profile.aggregate(net)?, gp)
    }

    /// `delta_i (C_ik x0_l + C_il x0_k)`; `k == l` is allowed here and gives
    /// the diagonal term used by the homogeneous identity.
    pub fn pair_marginal(&self, i: usize, k: usize, l: usize) -> f64 {
        self.delta[i] * (self.kernel[(i, k)] * self.x0[l] + self.kernel[(i, l)] * self.x0[k])
    }

    pub fn marginal(&self, i: usize, link: Link) -> f64 {
        self.pair_marginal(i, link.k, link.l)
    }

    /// Sum over agents, the social-optimum counterpart.
    pub fn marginal_sum(&self, link: Link) -> f64 {
        (0..self.delta.len()).map(|i| self.marginal(i, link)).sum()
    }

    pub fn welfare_utility(&self) -> f64 {
        self.utilities.sum()
    }
}

pub fn utility(net: &Network, profile: &StrategyProfile, gp: &GameParams, i: usize) -> Result<f64> {
    if gp.x0().iter().any(|&x| x >= 1.0) {
        return Err(Error::Param("initial probabilities must be below 1".into()));
    }
    Ok(KernelEval::from_profile(net, profile, gp)?.utilities[i])
}

/// `rho` times the sum of all entries of `D^i`.
pub fn cost(profile: &StrategyProfile, gp: &GameParams, i: usize) -> f64 {
    gp.rho * profile.agent(i).sum()
}

pub fn payoff(net: &Network, profile: &StrategyProfile, gp: &GameParams, i: usize) -> Result<f64> {
    Ok(utility(net, profile, gp, i)? - cost(profile, gp, i))
}

/// `sum_i v_i(A - D) - rho * sum(D)`.
pub fn social_welfare(net: &Network, aggregate: &AggregateInvestment, gp: &GameParams) -> Result<f64> {
    Ok(KernelEval::from_aggregate(net, aggregate, gp)?.welfare_utility() - gp.rho * aggregate.sum())
}

pub fn connectivity(net: &Network, profile: &StrategyProfile, gp: &GameParams) -> Result<ConnectivityKernel> {
    Ok(ConnectivityKernel { matrix: KernelEval::from_profile(net, profile, gp)?.kernel })
}

pub fn marginal_utility(
    net: &Network,
    profile: &StrategyProfile,
    gp: &GameParams,
    i: usize,
    k: usize,
    l: usize,
) -> Result<f64> {
    let link = Link::new(k, l)?;
    Ok(KernelEval::from_profile(net, profile, gp)?.marginal(i, link))
}

/// Exact derivative of `U_i` along the symmetric direction of `{k,l}`,
/// through the Fréchet derivative of the exponential. A diagnostic to set
/// beside [`marginal_utility`], which drops the non-commuting part.
pub fn exact_marginal_utility(
    net: &Network,
    profile: &StrategyProfile,
    gp: &GameParams,
    i: usize,
    k: usize,
    l: usize,
) -> Result<f64> {
    let link = Link::new(k, l)?;
    let n = net.n();
    let residual = residual_matrix(net, profile)?;
    let x0 = gp.x0();
    let bt = gp.bt();
    let m = DMatrix::from_fn(n, n, |r, c| bt * residual[(r, c)] * (1.0 - x0[c]));
    let mut dir = DMatrix::zeros(n, n);
    dir[(link.k, link.l)] = bt * (1.0 - x0[link.l]);
    dir[(link.l, link.k)] = bt * (1.0 - x0[link.k]);
    let frechet = expm_frechet(&m, &dir)?;
    let b = DVector::from_iterator(n, x0.iter().map(|x| x / (1.0 - x)));
    Ok(gp.delta[i] * (frechet * b)[i])
}

fn residual_matrix(net: &Network, profile: &StrategyProfile) -> Result<DMatrix<f64>> {
    Ok(profile.aggregate(net)?.residual(net).weights().clone())
}

/// Both sides of the homogeneous derivative identity for agent `i`:
/// `lhs` sums the kernel marginal over ordered pairs `(k,l)` of nodes with
/// `k` or `l` in `subset`, `rhs = -2 |subset| beta t_bar (1 - alpha) U_i`.
pub fn homogeneous_derivative_identity(
    net: &Network,
    profile: &StrategyProfile,
    gp: &GameParams,
    i: usize,
    subset: &BTreeSet<usize>,
) -> Result<(f64, f64)> {
    homogeneous_identity_aggregate(net, &profile.aggregate(net)?, gp, i, subset)
}

/// The same identity evaluated at an aggregate investment.
pub fn homogeneous_identity_aggregate(
    net: &Network,
    aggregate: &AggregateInvestment,
    gp: &GameParams,
    i: usize,
    subset: &BTreeSet<usize>,
) -> Result<(f64, f64)> {
    let alpha = gp.alpha().ok_or_else(|| Error::Param("identity needs homogeneous x0".into()))?;
    let n = net.n();
    if let Some(bad) = subset.iter().find(|&&m| m >= n) {
        return Err(Error::Param(format!("subset member {bad} out of range")));
    }
    let eval = KernelEval::from_aggregate(net, aggregate, gp)?;
    let mut lhs = 0.0;
    for k in 0..n {
        for l in 0..n {
            if subset.contains(&k) || subset.contains(&l) {
                lhs += eval.pair_marginal(i, k, l);
            }
        }
    }
    let rhs = -2.0 * subset.len() as f64 * gp.bt() * (1.0 - alpha) * eval.utilities[i];
    Ok((lhs, rhs))
}

/// Welfare of an arbitrary interaction matrix with `invested` units of
/// investment paid for.
pub fn welfare_of_interaction(gp: &GameParams, interaction: &DMatrix<f64>, invested: f64) -> Result<f64> {
    Ok(KernelEval::new(gp, interaction)?.welfare_utility() - gp.rho * invested)
}
