//! Dormand–Prince 5(4) integrator with step-size control, sampled on a
//! caller-supplied output grid.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, max_steps: 1_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `times[0]` and returns the state at every
/// entry of the increasing grid `times`.
pub fn integrate<F>(mut f: F, times: &[f64], y0: &[f64], opts: OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut out = Vec::with_capacity(times.len());
    let Some(&t_start) = times.first() else {
        return Ok(out);
    };
    out.push(y0.to_vec());
    let mut t = t_start;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    f(t, &y, &mut k[0]);

    let span = times.last().expect("nonempty") - t_start;
    let mut h = initial_step(&y, &k[0], span, opts);
    let mut steps = 0usize;

    for &t_target in &times[1..] {
        while t < t_target {
            if steps >= opts.max_steps {
                return Err(Error::NoConvergence(format!("ODE step budget exhausted at t = {t}")));
            }
            let last = t + h >= t_target;
            let h_try = if last { t_target - t } else { h };
            if h_try <= 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::StepUnderflow(t));
            }
            for s in 1..7 {
                for d in 0..dim {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[d];
                    }
                    stage[d] = y[d] + h_try * acc;
                }
                f(t + C[s] * h_try, &stage, &mut k[s]);
            }
            // Stage 7 is evaluated at the fifth-order solution (FSAL).
            y_new.copy_from_slice(&stage);
            let mut err = 0.0;
            for d in 0..dim {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[d];
                }
                let sc = opts.atol + opts.rtol * y[d].abs().max(y_new[d].abs());
                err += (h_try * e / sc).powi(2);
            }
            let err = (err / dim.max(1) as f64).sqrt();
            steps += 1;
            if err <= 1.0 {
                t = if last { t_target } else { t + h_try };
                std::mem::swap(&mut y, &mut y_new);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    h = h_try * factor;
                }
            } else {
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                if h <= 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow(t));
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step(y: &[f64], dy: &[f64], span: f64, opts: OdeOptions) -> f64 {
    if span <= 0.0 {
        return 1.0;
    }
    let dim = y.len().max(1) as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(dy) {
        let sc = opts.atol + opts.rtol * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (fi / sc).powi(2);
    }
    let (d0, d1) = ((d0 / dim).sqrt(), (d1 / dim).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span)
}
