//! Perron eigenpair of a residual network and the rank-one surrogate
//! `exp(beta t_bar (1 - alpha) mu_1) v v^T` of the kernel exponential.

use nalgebra::{DMatrix, DVector};

use super::EpidemicParams;
use crate::error::{Error, Result};
use crate::net_model::Network;

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralApprox {
    pub mu1: f64,
    /// Eigenvalue of second-largest modulus, with its sign.
    pub mu2: f64,
    pub v: DVector<f64>,
    pub rank_one: DMatrix<f64>,
}

impl SpectralApprox {
    pub fn gap(&self) -> f64 {
        (self.mu1 - self.mu2).abs()
    }
}

/// Power iteration with `apply`, returning the converged unit vector.
fn power<F>(mut apply: F, start: DVector<f64>) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let mut v = start.normalize();
    for _ in 0..MAX_ITER {
        let w = apply(&v);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(v);
        }
        let w = w / norm;
        if (&w - &v).norm() <= TOL {
            return Ok(w);
        }
        v = w;
    }
    Err(Error::NoConvergence(format!("power iteration exceeded {MAX_ITER} iterations")))
}

/// `net` is the residual network the kernel is built from; `alpha` must be
/// the common initial probability of `params`. The Perron vector is found on
/// the shifted matrix `R + sI`, which also converges on bipartite networks.
pub fn spectral_approximation(net: &Network, alpha: f64, params: &EpidemicParams) -> Result<SpectralApprox> {
    params.check_dim(net)?;
    if params.x0.iter().any(|&x| x != alpha) {
        return Err(Error::Param("spectral approximation needs homogeneous x0 = alpha".into()));
    }
    if !net.is_irreducible() {
        return Err(Error::Hypothesis("residual network must be irreducible".into()));
    }
    let n = net.n();
    let r = net.weights();
    let shift = 0.5 * net.row_sums().into_iter().fold(0.0, f64::max);
    let v = power(|x| r * x + x * shift, DVector::from_element(n, 1.0))?;
    let mu1 = v.dot(&(r * &v));
    let deflated = r - &v * v.transpose() * mu1;
    let mut start = DVector::from_fn(n, |i, _| 1.0 + 0.37 * i as f64);
    start -= &v * v.dot(&start);
    let w = power(|x| &deflated * (&deflated * x), start)?;
    let lam_sq = w.dot(&(&deflated * (&deflated * &w)));
    let sign = if w.dot(&(&deflated * &w)) < 0.0 { -1.0 } else { 1.0 };
    let mu2 = sign * lam_sq.max(0.0).sqrt();
    let scale = (params.beta * params.t_bar * (1.0 - alpha) * mu1).exp();
    let rank_one = &v * v.transpose() * scale;
    Ok(SpectralApprox { mu1, mu2, v, rank_one })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::matrix_exponential;

    fn params(n: usize, t_bar: f64) -> EpidemicParams {
        EpidemicParams::new(1.0, t_bar, vec![0.2; n]).unwrap()
    }

    #[test]
    fn complete_network_is_uniform() {
        let net = Network::complete(5, 0.7).unwrap();
        let s = spectral_approximation(&net, 0.2, &params(5, 1.0)).unwrap();
        assert!((s.mu1 - 0.7 * 4.0).abs() < 1e-9);
        assert!((s.mu2 + 0.7).abs() < 1e-8);
        for i in 0..5 {
            assert!((s.v[i] - 1.0 / 5f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn pair_spectrum() {
        let net = Network::complete(2, 1.0).unwrap();
        let s = spectral_approximation(&net, 0.2, &params(2, 1.0)).unwrap();
        assert!((s.mu1 - 1.0).abs() < 1e-12);
        assert!((s.mu2 + 1.0).abs() < 1e-12);
        assert!((s.gap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn star_spectrum() {
        let net = Network::star(4, 1.0).unwrap();
        let s = spectral_approximation(&net, 0.2, &params(4, 1.0)).unwrap();
        assert!((s.mu1 - 3f64.sqrt()).abs() < 1e-9);
        assert!((s.mu2 + 3f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn rejects_disconnected() {
        let net = Network::new(DMatrix::zeros(3, 3)).unwrap();
        assert!(spectral_approximation(&net, 0.2, &params(3, 1.0)).is_err());
    }

    #[test]
    fn star_with_chord_matches_eigensolver() {
        let mut w = Network::star(4, 1.0).unwrap().weights().clone();
        w[(1, 2)] = 1.0;
        w[(2, 1)] = 1.0;
        let net = Network::new(w.clone()).unwrap();
        let s = spectral_approximation(&net, 0.2, &params(4, 1.0)).unwrap();
        let eig = nalgebra::SymmetricEigen::new(w);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
        assert!((s.mu1 - vals[0]).abs() < 1e-9);
        assert!((s.mu2 - vals[1]).abs() < 1e-8);
        assert!(s.v.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn rank_one_error_decays_with_horizon() {
        let mut w = Network::cycle(5, 1.0).unwrap().weights().clone();
        w[(0, 2)] = 0.5;
        w[(2, 0)] = 0.5;
        let net = Network::new(w).unwrap();
        let mut last = f64::INFINITY;
        for t_bar in [1.0, 2.0, 4.0, 8.0] {
            let p = params(5, t_bar);
            let s = spectral_approximation(&net, 0.2, &p).unwrap();
            let exact = matrix_exponential(&(net.weights() * (t_bar * 0.8))).unwrap();
            let err = (&exact - &s.rank_one).norm() / exact.norm();
            assert!(err < last);
            last = err;
        }
    }

    #[test]
    fn rejects_inhomogeneous_x0() {
        let net = Network::complete(3, 1.0).unwrap();
        let p = EpidemicParams::new(1.0, 1.0, vec![0.1, 0.2, 0.1]).unwrap();
        assert!(spectral_approximation(&net, 0.1, &p).is_err());
    }
}
