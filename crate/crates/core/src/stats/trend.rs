use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::ResidualSeries;
use crate::error::{Error, Result};
use crate::ingest::DailySeries;
use crate::linalg::ols;

/// OLS line `count ≈ intercept + slope * t` with classical inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendModel {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
    pub intercept_t: f64,
    pub slope_t: f64,
    pub intercept_p: f64,
    pub slope_p: f64,
    /// Residual standard error.
    pub sigma: f64,
    pub n: usize,
}

impl TrendModel {
    /// Fits the line on `values` indexed `t = origin, origin + 1, ...`.
    pub fn fit(values: &[f64], origin: usize) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(Error::InsufficientData { needed: 3, got: n });
        }
        let design = DMatrix::from_fn(n, 2, |i, j| {
            if j == 0 {
                1.0
            } else {
                (origin + i) as f64
            }
        });
        let y = DVector::from_column_slice(values);
        let fit = ols(&design, &y)?;

        let (intercept, slope) = (fit.coef[0], fit.coef[1]);
        let (intercept_se, slope_se) = (fit.std_err[0], fit.std_err[1]);
        let intercept_t = intercept / intercept_se;
        let slope_t = slope / slope_se;
        Ok(Self {
            intercept,
            slope,
            intercept_se,
            slope_se,
            intercept_t,
            slope_t,
            intercept_p: two_sided_p(intercept_t, fit.df),
            slope_p: two_sided_p(slope_t, fit.df),
            sigma: fit.sigma2.sqrt(),
            n,
        })
    }

    /// A line with the given coefficients and no inference attached.
    pub fn fixed(intercept: f64, slope: f64) -> Self {
        Self {
            intercept,
            slope,
            intercept_se: f64::NAN,
            slope_se: f64::NAN,
            intercept_t: f64::NAN,
            slope_t: f64::NAN,
            intercept_p: f64::NAN,
            slope_p: f64::NAN,
            sigma: f64::NAN,
            n: 0,
        }
    }

    pub fn value_at(&self, t: usize) -> f64 {
        self.intercept + self.slope * t as f64
    }

    pub fn values_from(&self, start: usize, len: usize) -> Vec<f64> {
        (start..start + len).map(|t| self.value_at(t)).collect()
    }

    /// `values[i] - trend(origin + i)`.
    pub fn detrend_values(&self, values: &[f64], origin: usize) -> Result<ResidualSeries> {
        let resid = values
            .iter()
            .enumerate()
            .map(|(i, v)| v - self.value_at(origin + i))
            .collect();
        ResidualSeries::new(resid, origin)
    }
}

fn two_sided_p(t: f64, df: usize) -> f64 {
    if !t.is_finite() {
        return f64::NAN;
    }
    match StudentsT::new(0.0, 1.0, df as f64) {
        Ok(dist) => 2.0 * dist.sf(t.abs()),
        Err(_) => f64::NAN,
    }
}

/// Fits the trend on a daily series using `t = 1..n`.
pub fn fit_linear_trend(series: &DailySeries) -> Result<TrendModel> {
    TrendModel::fit(&series.values(), 1)
}

/// Residuals of a daily series about a trend, anchored at `t = 1`.
pub fn detrend(series: &DailySeries, trend: &TrendModel) -> ResidualSeries {
    trend
        .detrend_values(&series.values(), 1)
        .expect("origin 1 is valid")
}
