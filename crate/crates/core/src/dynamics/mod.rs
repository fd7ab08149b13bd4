//! Infection probabilities of the SI epidemic: the exact Markov chain (by
//! simulation and by the forward equations), the mean-field ODE, its
//! linearization and the closed-form upper bound between the two.

mod ctmc;
mod expm;
mod kolmogorov;
pub mod ode;
mod spectral;

pub use ctmc::{simulate_exact_ctmc, MonteCarloEstimate};
pub use expm::{expm_frechet, matrix_exponential};
pub use kolmogorov::{solve_exact_kolmogorov, MAX_EXACT_NODES};
pub use spectral::{spectral_approximation, SpectralApprox};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_model::Network;

/// Number of points on the default output grid.
pub const DEFAULT_GRID: usize = 257;

/// Contagion rate, horizon and initial infection probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    pub beta: f64,
    pub t_bar: f64,
    pub x0: Vec<f64>,
}

impl EpidemicParams {
    /// `t_bar = 0` is accepted so that the dynamics can be evaluated at the
    /// initial instant; the games require a positive horizon.
    pub fn new(beta: f64, t_bar: f64, x0: Vec<f64>) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Param(format!("beta must be positive, got {beta}")));
        }
        if !(t_bar >= 0.0 && t_bar.is_finite()) {
            return Err(Error::Param(format!("t_bar must be nonnegative, got {t_bar}")));
        }
        if let Some(bad) = x0.iter().find(|&&x| !(0.0..1.0).contains(&x)) {
            return Err(Error::Param(format!("initial probabilities must lie in [0,1), got {bad}")));
        }
        if !x0.iter().any(|&x| x > 0.0) {
            return Err(Error::Param("at least one initial probability must be positive".into()));
        }
        Ok(EpidemicParams { beta, t_bar, x0 })
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    /// Common initial probability, if all entries coincide.
    pub fn alpha(&self) -> Option<f64> {
        let a = self.x0[0];
        self.x0.iter().all(|&x| x == a).then_some(a)
    }

    pub fn with_t_bar(&self, t_bar: f64) -> Result<Self> {
        EpidemicParams::new(self.beta, t_bar, self.x0.clone())
    }

    pub(crate) fn check_dim(&self, net: &Network) -> Result<()> {
        if self.n() != net.n() {
            return Err(Error::Dimension { expected: net.n(), got: self.n() });
        }
        Ok(())
    }
}

/// Per-node values on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.values.last().expect("trajectories are nonempty")
    }

    /// CSV with header `t,x_1,...,x_n`.
    pub fn to_csv(&self) -> String {
        let n = self.values.first().map_or(0, Vec::len);
        let mut s = String::from("t");
        for i in 1..=n {
            s.push_str(&format!(",x_{i}"));
        }
        s.push('\n');
        for (t, row) in self.times.iter().zip(&self.values) {
            s.push_str(&format!("{t}"));
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// `points` equally spaced times on `[0, t_bar]`.
pub fn time_grid(t_bar: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|k| t_bar * k as f64 / (points - 1) as f64).collect()
}

/// Adaptive integration of `x_i' = (1 - x_i) beta sum_j a_ij x_j`.
pub fn integrate_mean_field(net: &Network, params: &EpidemicParams, points: usize) -> Result<Trajectory> {
    params.check_dim(net)?;
    let times = time_grid(params.t_bar, points);
    let a = net.weights().clone();
    let beta = params.beta;
    let n = net.n();
    let values = ode::integrate(
        |_, x, dx| {
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += a[(i, j)] * x[j];
                }
                dx[i] = (1.0 - x[i]) * beta * s;
            }
        },
        &times,
        &params.x0,
        ode::OdeOptions::default(),
    )?;
    debug_assert!(values.iter().flatten().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
    Ok(Trajectory { times, values })
}

/// `x~(t) = exp(beta t A) x0`.
pub fn linearized_solution(net: &Network, params: &EpidemicParams, points: usize) -> Result<Trajectory> {
    params.check_dim(net)?;
    let times = time_grid(params.t_bar, points);
    let x0 = DVector::from_vec(params.x0.clone());
    let values = times
        .iter()
        .map(|&t| Ok((matrix_exponential(&(net.weights() * (params.beta * t)))? * &x0).as_slice().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times, values })
}

/// Closed-form upper bound on the mean-field solution and its log transform.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    /// `x^(t) = 1 - exp(-y^(t))`.
    pub x: Trajectory,
    /// `y^(t) = -ln(1 - x0) + [exp(beta t A W) - I] W^-1 x0` with `W = diag(1 - x0)`.
    pub y: Trajectory,
}

pub fn closed_form_upper_bound(net: &Network, params: &EpidemicParams, points: usize) -> Result<UpperBound> {
    params.check_dim(net)?;
    let n = net.n();
    let times = time_grid(params.t_bar, points);
    let w = DMatrix::from_diagonal(&DVector::from_iterator(n, params.x0.iter().map(|x| 1.0 - x)));
    let b = DVector::from_iterator(n, params.x0.iter().map(|x| x / (1.0 - x)));
    let aw = net.weights() * &w;
    let mut xs = Vec::with_capacity(times.len());
    let mut ys = Vec::with_capacity(times.len());
    for &t in &times {
        let e = matrix_exponential(&(&aw * (params.beta * t)))?;
        let growth = &e * &b - &b;
        let y: Vec<f64> = (0..n).map(|i| -(-params.x0[i]).ln_1p() + growth[i]).collect();
        if t == 0.0 {
            xs.push(params.x0.clone());
        } else {
            xs.push(y.iter().map(|v| -(-v).exp_m1()).collect());
        }
        ys.push(y);
    }
    Ok(UpperBound {
        x: Trajectory { times: times.clone(), values: xs },
        y: Trajectory { times, values: ys },
    })
}

/// Right-hand side of the log-transformed system
/// `y_i' = beta sum_j a_ij (1 - exp(-y_j))`.
pub fn log_transform_rhs(net: &Network, beta: f64, y: &[f64]) -> Vec<f64> {
    let n = net.n();
    (0..n)
        .map(|i| beta * (0..n).map(|j| net.weight(i, j) * -(-y[j]).exp_m1()).sum::<f64>())
        .collect()
}
