//! Starting values for the likelihood optimiser.

use nalgebra::{DMatrix, DVector};

use super::transform::{is_invertible, is_stationary};
use crate::linalg::lstsq;
use crate::stats::{autocovariance, durbin_levinson};

/// Two-stage long-autoregression estimate.
///
/// A long AR fitted by Yule-Walker supplies innovation estimates `ê_t`;
/// regressing `x_t` on `x_{t-1..t-p}` and `ê_{t-1..t-q}` then gives the ARMA
/// coefficients. Estimates outside the stationary/invertible region are
/// shrunk towards zero until they are inside it.
pub(crate) fn hannan_rissanen(x: &[f64], p: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let zeros = || (vec![0.0; p], vec![0.0; q]);
    if p + q == 0 {
        return zeros();
    }

    let innovations: Vec<f64>;
    let start;
    if q == 0 {
        innovations = Vec::new();
        start = p;
    } else {
        let m = ((n as f64).ln().powi(2).floor() as usize)
            .max(2 * p.max(q))
            .min(n / 4);
        if m == 0 {
            return zeros();
        }
        let Ok(gamma) = autocovariance(x, m) else {
            return zeros();
        };
        let Ok(dl) = durbin_levinson(&gamma, m) else {
            return zeros();
        };
        let long = dl.coefficients(m);
        innovations = (0..n)
            .map(|t| {
                if t < m {
                    0.0
                } else {
                    x[t] - long.iter().enumerate().map(|(j, c)| c * x[t - 1 - j]).sum::<f64>()
                }
            })
            .collect();
        start = m + q.max(p);
    }
    if n <= start + p + q {
        return zeros();
    }

    let rows = n - start;
    let design = DMatrix::from_fn(rows, p + q, |r, c| {
        let t = start + r;
        if c < p {
            x[t - 1 - c]
        } else {
            innovations[t - 1 - (c - p)]
        }
    });
    let y = DVector::from_iterator(rows, (start..n).map(|t| x[t]));
    let Ok(coef) = lstsq(&design, &y) else {
        return zeros();
    };
    let (mut phi, mut theta) = (coef[..p].to_vec(), coef[p..].to_vec());

    for _ in 0..40 {
        if is_stationary(&phi) && is_invertible(&theta) {
            return (phi, theta);
        }
        if !is_stationary(&phi) {
            shrink(&mut phi);
        }
        if !is_invertible(&theta) {
            shrink(&mut theta);
        }
    }
    zeros()
}

fn shrink(c: &mut [f64]) {
    for (j, v) in c.iter_mut().enumerate() {
        *v *= 0.9f64.powi(j as i32 + 1);
    }
}

/// Conditional sum of squares `Σ e_t²` for `t > p`, with pre-sample
/// innovations set to zero.
pub(crate) fn css(x: &[f64], phi: &[f64], theta: &[f64]) -> f64 {
    let p = phi.len();
    let mut e = vec![0.0; x.len()];
    let mut total = 0.0;
    for t in p..x.len() {
        let mut pred = 0.0;
        for (j, a) in phi.iter().enumerate() {
            pred += a * x[t - 1 - j];
        }
        for (j, b) in theta.iter().enumerate() {
            if t > j {
                pred += b * e[t - 1 - j];
            }
        }
        e[t] = x[t] - pred;
        total += e[t] * e[t];
    }
    total
}
