//! Forward equations of the SI chain over all `2^n` infection states.

use super::{ode, EpidemicParams};
use crate::error::{Error, Result};
use crate::net_model::Network;

pub const MAX_EXACT_NODES: usize = 12;

/// Exact marginals `P[X_i(t_bar) = 1]`, integrated to tolerance 1e-12.
pub fn solve_exact_kolmogorov(net: &Network, params: &EpidemicParams) -> Result<Vec<f64>> {
    params.check_dim(net)?;
    let n = net.n();
    if n > MAX_EXACT_NODES {
        return Err(Error::TooLarge(n));
    }
    let states = 1usize << n;
    let mut p0 = vec![1.0; states];
    for (s, p) in p0.iter_mut().enumerate() {
        for i in 0..n {
            *p *= if s >> i & 1 == 1 { params.x0[i] } else { 1.0 - params.x0[i] };
        }
    }
    // rates[s * n + i]: rate at which susceptible node i is infected in state s.
    let mut rates = vec![0.0; states * n];
    for s in 0..states {
        for i in 0..n {
            if s >> i & 1 == 0 {
                let r: f64 = (0..n).filter(|j| s >> j & 1 == 1).map(|j| net.weight(i, j)).sum();
                rates[s * n + i] = params.beta * r;
            }
        }
    }
    let final_p = if params.t_bar == 0.0 {
        p0
    } else {
        let opts = ode::OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let out = ode::integrate(
            |_, p, dp| {
                dp.iter_mut().for_each(|v| *v = 0.0);
                for s in 0..states {
                    let ps = p[s];
                    for i in 0..n {
                        let r = rates[s * n + i];
                        if r > 0.0 {
                            dp[s] -= r * ps;
                            dp[s | 1 << i] += r * ps;
                        }
                    }
                }
            },
            &[0.0, params.t_bar],
            &p0,
            opts,
        )?;
        out.into_iter().last().expect("two output points")
    };
    Ok((0..n)
        .map(|i| (0..states).filter(|s| s >> i & 1 == 1).map(|s| final_p[s]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn no_edges_or_zero_horizon() {
        let net = Network::new(DMatrix::zeros(2, 2)).unwrap();
        let p = EpidemicParams::new(1.0, 3.0, vec![0.4, 0.1]).unwrap();
        let m = solve_exact_kolmogorov(&net, &p).unwrap();
        assert!((m[0] - 0.4).abs() < 1e-15 && (m[1] - 0.1).abs() < 1e-15);

        let net = Network::complete(3, 1.0).unwrap();
        let p = EpidemicParams::new(1.0, 0.0, vec![0.4, 0.1, 0.2]).unwrap();
        let m = solve_exact_kolmogorov(&net, &p).unwrap();
        for (a, b) in m.iter().zip(&p.x0) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_closed_form() {
        // Node 2 is infected by node 1 at rate 1 once node 1 is infected.
        let net = Network::complete(2, 1.0).unwrap();
        let p = EpidemicParams::new(1.0, 1.0, vec![0.5, 0.0]).unwrap();
        let m = solve_exact_kolmogorov(&net, &p).unwrap();
        assert!((m[0] - 0.5).abs() < 1e-12);
        assert!((m[1] - 0.5 * (1.0 - (-1f64).exp())).abs() < 1e-11);
    }

    #[test]
    fn rejects_large_networks() {
        let net = Network::cycle(13, 1.0).unwrap();
        let p = EpidemicParams::new(1.0, 1.0, vec![0.1; 13]).unwrap();
        assert_eq!(solve_exact_kolmogorov(&net, &p), Err(Error::TooLarge(13)));
    }
}
