//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13 (Higham 2005).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Low-degree approximant from precomputed even powers `I, A^2, A^4, ...`.
fn pade_low(a: &DMatrix<f64>, b: &[f64], even: &[DMatrix<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for (k, p) in even.iter().enumerate().take(b.len() / 2) {
        u += p * b[2 * k + 1];
        v += p * b[2 * k];
    }
    (a * u, v)
}

fn pade_13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

fn solve_pade(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = &v + &u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::NoConvergence("singular Padé denominator".into()))
}

/// `exp(m)` for a square matrix with finite entries.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::Shape { rows, cols });
    }
    for i in 0..rows {
        for j in 0..cols {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { i, j });
            }
        }
    }
    let n = rows;
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norm = one_norm(m);
    if norm == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    for &(deg, theta) in &THETA {
        if norm <= theta {
            let id = DMatrix::identity(n, n);
            let a2 = m * m;
            let mut even = vec![id, a2.clone()];
            while even.len() < (deg + 1) / 2 {
                let next = even.last().expect("nonempty") * &a2;
                even.push(next);
            }
            let b: &[f64] = match deg {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(m, b, &even);
            return solve_pade(u, v);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = m * 2f64.powi(-s);
    let (u, v) = pade_13(&scaled);
    let mut r = solve_pade(u, v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Fréchet derivative `L(m, e)` of the exponential, read off the upper-right
/// block of `exp([[m, e], [0, m]])`.
pub fn expm_frechet(m: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(m);
    big.view_mut((n, n), (n, n)).copy_from(m);
    big.view_mut((0, n), (n, n)).copy_from(e);
    let ex = matrix_exponential(&big)?;
    Ok(ex.view((0, n), (n, n)).into_owned())
}
