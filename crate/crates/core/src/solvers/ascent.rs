//! Projected ascent on a box for a monotone field, with Barzilai-Borwein
//! steps and a nonmonotone safeguard on the projected-gradient norm.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const WINDOW: usize = 8;
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e14;
/// Accepted steps without a 0.1% drop in the best residual before giving up.
const STALL_ITERS: usize = 1000;

#[derive(Debug, Clone)]
pub(crate) struct Ascent {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub pg_norm: f64,
}

fn project(x: f64, cap: f64) -> f64 {
    x.clamp(0.0, cap)
}

pub(crate) fn pg_norm(x: &[f64], g: &[f64], caps: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(caps)
        .map(|((&x, &g), &c)| (project(x + g, c) - x).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Seeks `x` in `[0, caps]` with `x = P(x + g(x))`. `field` returns `g`.
pub(crate) fn projected_ascent<F>(x0: &[f64], caps: &[f64], mut field: F, tol: f64, max_iter: usize) -> Result<Ascent>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x: Vec<f64> = x0.iter().zip(caps).map(|(&x, &c)| project(x, c)).collect();
    if x.is_empty() {
        return Ok(Ascent { x, iterations: 0, converged: true, pg_norm: 0.0 });
    }
    let mut g = field(&x)?;
    let mut pn = pg_norm(&x, &g, caps);
    let mut recent: VecDeque<f64> = VecDeque::from([pn]);
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cmax = caps.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut best = pn;
    let mut best_it = 0;
    let mut eta = if gmax > 0.0 && cmax > 0.0 { (0.25 * cmax / gmax).clamp(MIN_STEP, MAX_STEP) } else { 1.0 };

    for it in 0..max_iter {
        if pn <= tol {
            return Ok(Ascent { x, iterations: it, converged: true, pg_norm: pn });
        }
        let reference = recent.iter().fold(0.0f64, |m, v| m.max(*v));
        loop {
            let trial: Vec<f64> = x.iter().zip(&g).zip(caps).map(|((&x, &g), &c)| project(x + eta * g, c)).collect();
            let gt = field(&trial)?;
            let pt = pg_norm(&trial, &gt, caps);
            if pt <= reference || eta <= MIN_STEP {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for j in 0..x.len() {
                    let s = trial[j] - x[j];
                    let y = gt[j] - g[j];
                    ss += s * s;
                    sy += s * y;
                }
                // The field decreases along the step, so -s.y > 0 when curvature is seen.
                eta = if sy < 0.0 { (ss / -sy).clamp(MIN_STEP, MAX_STEP) } else { (eta * 2.0).min(MAX_STEP) };
                x = trial;
                g = gt;
                pn = pt;
                recent.push_back(pn);
                if recent.len() > WINDOW {
                    recent.pop_front();
                }
                break;
            }
            eta *= 0.5;
        }
        if !pn.is_finite() {
            return Err(Error::NoConvergence("projected ascent produced a non-finite iterate".into()));
        }
        if pn < best * (1.0 - 1e-3) {
            best = pn;
            best_it = it;
        } else if it - best_it > STALL_ITERS && pn > tol {
            return Ok(Ascent { x, iterations: it + 1, converged: false, pg_norm: pn });
        }
    }
    Ok(Ascent { x, iterations: max_iter, converged: pn <= tol, pg_norm: pn })
}
