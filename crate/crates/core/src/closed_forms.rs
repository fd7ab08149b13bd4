//! Analytical solutions on complete networks with uniform weight `a`.
//!
//! In the symmetric game every link carries the same transformed residual
//! weight `h = beta t_bar (1 - alpha)(a - d)`, so the exponential of
//! `H = h (J - I)` has diagonal `chi(h)` and off-diagonal `chi(h) - e^-h`.
//! Every agent's marginal utility on an incident link is then
//! `delta beta t_bar alpha chi~(h)` with `chi~ = 2 chi - e^-h`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_core::GameParams;
use crate::net_model::{localize_profile, AggregateInvestment, Link, Mode, Network, StrategyProfile};

const MAX_TERMS: usize = 500;
const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    FullInvestment,
    NoInvestment,
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSolution {
    pub h: f64,
    pub chi: f64,
    pub chi_tilde: f64,
    pub regime: Regime,
    /// Aggregate investment per link, `a - h / (beta t_bar (1 - alpha))`.
    pub investment: f64,
}

impl SymmetricSolution {
    /// Uniform profile with each link's investment split between its
    /// endpoints; an equilibrium in both game modes.
    pub fn profile(&self, net: &Network) -> Result<StrategyProfile> {
        let n = net.n();
        let total = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { self.investment.min(net.weight(i, j)) });
        let agg = AggregateInvestment::new(total, net)?;
        let elig: BTreeMap<Link, Vec<usize>> = net.links().into_iter().map(|l| (l, vec![l.k, l.l])).collect();
        localize_profile(&agg, &elig, Mode::Local)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleAgentSolution {
    pub h: f64,
    pub mu: f64,
    pub c_self: f64,
    pub c_cross: f64,
    pub dominance: bool,
}

/// `(chi(h), chi~(h))` for `n` nodes from the factorial recursion
/// `u_k = h (n-1) v_{k-1}`, `v_k = h [(n-2) v_{k-1} + u_{k-1}]`.
pub fn chi(h: f64, n: usize) -> Result<(f64, f64)> {
    let (c, _) = chi_parts(h, n)?;
    Ok((c, 2.0 * c - (-h).exp()))
}

/// Diagonal and off-diagonal of `exp(H)`, both summed from the recursion.
pub fn chi_parts(h: f64, n: usize) -> Result<(f64, f64)> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::Param(format!("h must be nonnegative, got {h}")));
    }
    if n < 2 {
        return Err(Error::Param("n must be at least 2".into()));
    }
    let nf = n as f64;
    // Scaled terms u_k / k! and v_k / k!.
    let (mut u, mut v) = (0.0, h);
    let (mut diag, mut off) = (1.0 + u, v);
    for k in 2..=MAX_TERMS {
        let kf = k as f64;
        let (nu, nv) = (h * (nf - 1.0) * v / kf, h * ((nf - 2.0) * v + u) / kf);
        u = nu;
        v = nv;
        diag += u;
        off += v;
        if u < 1e-16 * diag && v < 1e-16 * off.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok((diag, off))
}

/// Checks that `chi~` increases along a uniform grid of `[0, h_max]`.
fn chi_tilde_monotone(n: usize, h_max: f64) -> Result<bool> {
    let mut last = chi(0.0, n)?.1;
    for s in 1..=256 {
        let next = chi(h_max * s as f64 / 256.0, n)?.1;
        if next <= last {
            return Ok(false);
        }
        last = next;
    }
    Ok(true)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // f increasing with f(lo) < 0 < f(hi).
    while hi - lo > BISECTION_TOL * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn symmetric_scalars(gp: &GameParams) -> Result<(f64, f64)> {
    let alpha = gp.alpha().ok_or_else(|| Error::Hypothesis("x0 is not homogeneous".into()))?;
    let delta = gp.common_delta().ok_or_else(|| Error::Hypothesis("delta is not homogeneous".into()))?;
    Ok((alpha, delta))
}

/// Symmetric equilibrium on the complete network with weight `a`.
pub fn symmetric_equilibrium(a: f64, gp: &GameParams) -> Result<SymmetricSolution> {
    let (alpha, delta) = symmetric_scalars(gp)?;
    if !(a > 0.0) {
        return Err(Error::Param(format!("link weight must be positive, got {a}")));
    }
    if delta == 0.0 {
        return Err(Error::Hypothesis("delta must be positive".into()));
    }
    let n = gp.n();
    let c = gp.bt() * (1.0 - alpha);
    let h_max = c * a;
    let base = delta * gp.bt() * alpha;
    let r = gp.rho / base;
    let (h, regime) = if gp.rho <= base {
        (0.0, Regime::FullInvestment)
    } else if gp.rho >= base * chi(h_max, n)?.1 {
        (h_max, Regime::NoInvestment)
    } else {
        if !chi_tilde_monotone(n, h_max)? {
            return Err(Error::NoConvergence("chi~ is not monotone on the interval".into()));
        }
        let h = bisect(|h| chi(h, n).map(|x| x.1).unwrap_or(f64::NAN) - r, 0.0, h_max);
        (h, Regime::Interior)
    };
    let (ch, ct) = chi(h, n)?;
    let investment = match regime {
        Regime::FullInvestment => a,
        Regime::NoInvestment => 0.0,
        Regime::Interior => (a - h / c).clamp(0.0, a),
    };
    Ok(SymmetricSolution { h, chi: ch, chi_tilde: ct, regime, investment })
}

/// Thresholds `(delta beta t_bar alpha, delta beta t_bar alpha chi~(h_max))`
/// separating the three symmetric regimes.
pub fn regime_thresholds(a: f64, gp: &GameParams) -> Result<(f64, f64)> {
    let (alpha, delta) = symmetric_scalars(gp)?;
    let base = delta * gp.bt() * alpha;
    let h_max = gp.bt() * (1.0 - alpha) * a;
    Ok((base, base * chi(h_max, gp.n())?.1))
}

fn single_agent_gain(mu: f64, n: usize) -> f64 {
    let s = ((n - 1) as f64).sqrt();
    (s * mu).sinh() / s + (s * mu).cosh()
}

/// Interior equilibrium when only one agent has a positive `delta`; the
/// agent reduces each of its own links by the same amount.
pub fn single_agent_equilibrium(a: f64, gp: &GameParams) -> Result<SingleAgentSolution> {
    let alpha = gp.alpha().ok_or_else(|| Error::Hypothesis("x0 is not homogeneous".into()))?;
    let active: Vec<usize> = (0..gp.n()).filter(|&i| gp.delta[i] > 0.0).collect();
    let [agent] = active.as_slice() else {
        return Err(Error::Hypothesis("exactly one agent must have a positive delta".into()));
    };
    let n = gp.n();
    let c = gp.bt() * (1.0 - alpha);
    let m = c * a;
    let base = gp.delta[*agent] * gp.bt() * alpha;
    let r = gp.rho / base;
    if !(r > 1.0 && r < single_agent_gain(m, n)) {
        return Err(Error::Hypothesis(format!("rho = {} is outside the interior band", gp.rho)));
    }
    let mu = bisect(|mu| single_agent_gain(mu, n) - r, 0.0, m);
    let s = ((n - 1) as f64).sqrt();
    let c_self = (s * mu).cosh();
    let c_cross = (s * mu).sinh() / s;
    let dominance = (s * mu).sinh() > s * (s * mu).cosh();
    Ok(SingleAgentSolution { h: (a - mu / c).clamp(0.0, a), mu, c_self, c_cross, dominance })
}
