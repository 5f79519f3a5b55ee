//! Augmented Dickey-Fuller test, constant-plus-trend variant.
//!
//! Regresses `Δx_t` on a constant, a linear trend, `x_{t-1}` and `k` lagged
//! differences, with `k = trunc((N - 1)^(1/3))`. The p-value is read off
//! the finite-sample Dickey-Fuller trend-case table by linear interpolation
//! first in the sample size, then in the statistic. Statistics beyond the
//! table's ends are clamped to 0.01 / 0.99.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ols;

const MIN_OBS: usize = 25;

const TABLE_SIZES: [f64; 6] = [25.0, 50.0, 100.0, 250.0, 500.0, 100_000.0];
const TABLE_PROBS: [f64; 8] = [0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99];
/// Critical values, one row per probability in `TABLE_PROBS`, one column
/// per sample size in `TABLE_SIZES`.
const TABLE_CRIT: [[f64; 6]; 8] = [
    [-4.38, -4.15, -4.04, -3.99, -3.98, -3.96],
    [-3.95, -3.80, -3.73, -3.69, -3.68, -3.66],
    [-3.60, -3.50, -3.45, -3.43, -3.42, -3.41],
    [-3.24, -3.18, -3.15, -3.13, -3.13, -3.12],
    [-1.14, -1.19, -1.22, -1.23, -1.24, -1.25],
    [-0.80, -0.87, -0.90, -0.92, -0.93, -0.94],
    [-0.50, -0.58, -0.62, -0.64, -0.65, -0.66],
    [-0.15, -0.24, -0.28, -0.31, -0.32, -0.33],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub lag_order: usize,
    /// Rows in the test regression.
    pub n_obs: usize,
    pub p_value: f64,
    /// Set when the statistic fell outside the table and the p-value is a bound.
    pub p_value_clamped: bool,
}

pub fn adf_test(x: &[f64]) -> Result<AdfResult> {
    let n_total = x.len();
    if n_total < MIN_OBS {
        return Err(Error::InsufficientData {
            needed: MIN_OBS,
            got: n_total,
        });
    }
    let k = ((n_total - 1) as f64).cbrt().trunc() as usize;
    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len();
    let rows = n - k;
    // constant, trend, level, k lagged differences
    let cols = 3 + k;
    if rows <= cols {
        return Err(Error::InsufficientData {
            needed: cols + k + 2,
            got: n_total,
        });
    }

    let design = DMatrix::from_fn(rows, cols, |r, c| {
        let j = r + k;
        match c {
            0 => 1.0,
            1 => (j + 1) as f64,
            2 => x[j],
            _ => diffs[j - (c - 2)],
        }
    });
    let y = DVector::from_iterator(rows, (k..n).map(|j| diffs[j]));
    let fit = ols(&design, &y)?;
    let statistic = fit.coef[2] / fit.std_err[2];
    if !statistic.is_finite() {
        return Err(Error::Numerical(
            "ADF statistic is not finite (degenerate regression)".into(),
        ));
    }
    let (p_value, p_value_clamped) = adf_p_value(statistic, n);
    Ok(AdfResult {
        statistic,
        lag_order: k,
        n_obs: rows,
        p_value,
        p_value_clamped,
    })
}

/// Interpolated p-value for a trend-case statistic at sample size `n`
/// (the number of differences). Returns the value and a clamp flag.
pub fn adf_p_value(statistic: f64, n: usize) -> (f64, bool) {
    let crit: Vec<f64> = TABLE_CRIT
        .iter()
        .map(|row| interp(n as f64, &TABLE_SIZES, row))
        .collect();
    let clamped = statistic < crit[0] || statistic > crit[crit.len() - 1];
    (interp(statistic, &crit, &TABLE_PROBS), clamped)
}

/// Piecewise-linear interpolation with constant extension beyond the ends.
/// `xs` must be non-decreasing.
fn interp(x: f64, xs: &[f64], ys: &[f64]) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let (x0, x1) = (xs[i], xs[i + 1]);
    if x1 == x0 {
        return ys[i];
    }
    ys[i] + (ys[i + 1] - ys[i]) * (x - x0) / (x1 - x0)
}
