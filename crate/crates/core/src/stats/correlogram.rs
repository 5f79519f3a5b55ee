use serde::Serialize;

use crate::error::{Error, Result};

/// Correlations for lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelogramResult {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    /// Half-width of the approximate 95% white-noise band, `1.96 / sqrt(n)`.
    pub band: f64,
}

/// Biased sample autocovariances `gamma(0..=max_lag)` (divisor `n`).
pub fn autocovariance(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if max_lag >= n {
        return Err(Error::InvalidInput(format!(
            "max lag {max_lag} must be below the series length {n}"
        )));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    Ok((0..=max_lag)
        .map(|h| {
            centered[..n - h]
                .iter()
                .zip(&centered[h..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect())
}

pub fn acf(x: &[f64], max_lag: usize) -> Result<CorrelogramResult> {
    let gamma = autocovariance(x, max_lag)?;
    if !(gamma[0] > 0.0) || !gamma[0].is_finite() {
        return Err(Error::ZeroVariance);
    }
    let values = gamma.iter().map(|g| g / gamma[0]).collect();
    Ok(CorrelogramResult {
        lags: (0..=max_lag).collect(),
        values,
        band: 1.96 / (x.len() as f64).sqrt(),
    })
}

/// Partial autocorrelations. Lag 0 is reported as 1 by convention.
pub fn pacf(x: &[f64], max_lag: usize) -> Result<CorrelogramResult> {
    let rho = acf(x, max_lag)?;
    let dl = durbin_levinson(&rho.values, max_lag)?;
    let mut values = Vec::with_capacity(max_lag + 1);
    values.push(1.0);
    values.extend_from_slice(&dl.pacf);
    Ok(CorrelogramResult {
        lags: rho.lags,
        values,
        band: rho.band,
    })
}

/// Output of the Durbin-Levinson recursion up to some maximum order.
#[derive(Debug, Clone)]
pub struct DurbinLevinson {
    /// `pacf[h - 1]` is the lag-`h` partial autocorrelation.
    pub pacf: Vec<f64>,
    /// One-step prediction error variance for orders `0..=max`, in the
    /// units of the input sequence (`variances[0] = gamma[0]`).
    pub variances: Vec<f64>,
    coefficients: Vec<Vec<f64>>,
}

impl DurbinLevinson {
    /// AR coefficients of the best linear predictor of the given order.
    pub fn coefficients(&self, order: usize) -> &[f64] {
        &self.coefficients[order]
    }

    pub fn max_order(&self) -> usize {
        self.pacf.len()
    }
}

/// Solves the Yule-Walker equations for every order up to `max_order`
/// from an autocovariance (or autocorrelation) sequence.
pub fn durbin_levinson(gamma: &[f64], max_order: usize) -> Result<DurbinLevinson> {
    if gamma.len() <= max_order {
        return Err(Error::InvalidInput(format!(
            "need {} autocovariances for order {max_order}, got {}",
            max_order + 1,
            gamma.len()
        )));
    }
    if !(gamma[0] > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let mut pacf = Vec::with_capacity(max_order);
    let mut variances = Vec::with_capacity(max_order + 1);
    let mut coefficients: Vec<Vec<f64>> = Vec::with_capacity(max_order + 1);
    variances.push(gamma[0]);
    coefficients.push(Vec::new());

    let mut phi: Vec<f64> = Vec::new();
    let mut v = gamma[0];
    for h in 1..=max_order {
        let acc: f64 = phi
            .iter()
            .enumerate()
            .map(|(j, p)| p * gamma[h - 1 - j])
            .sum();
        let k = (gamma[h] - acc) / v;
        let mut next = Vec::with_capacity(h);
        for j in 0..h - 1 {
            next.push(phi[j] - k * phi[h - 2 - j]);
        }
        next.push(k);
        v *= 1.0 - k * k;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Numerical(format!(
                "Durbin-Levinson breakdown at order {h}: prediction variance {v}"
            )));
        }
        pacf.push(k);
        variances.push(v);
        coefficients.push(next.clone());
        phi = next;
    }
    Ok(DurbinLevinson {
        pacf,
        variances,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acf_of_ramp() {
        let r = acf(&[1.0, 2.0, 3.0, 4.0, 5.0], 1).unwrap();
        assert_eq!(r.values[0], 1.0);
        assert!((r.values[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn alternating_sequence_tends_to_minus_one() {
        // divisor-n: acf(1) = -(n - 1) / n for an exact alternation
        for n in [10usize, 100, 1000] {
            let x: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let r = acf(&x, 1).unwrap();
            assert!((r.values[1] + (n as f64 - 1.0) / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_variance_rejected() {
        assert!(matches!(acf(&[2.0; 8], 3), Err(Error::ZeroVariance)));
        assert!(matches!(pacf(&[2.0; 8], 3), Err(Error::ZeroVariance)));
    }

    #[test]
    fn lag_must_be_below_length() {
        assert!(acf(&[1.0, 2.0, 3.0], 3).is_err());
    }

    #[test]
    fn pacf_lag_one_equals_acf() {
        let x = [0.3, -1.2, 2.2, 0.7, -0.4, 1.9, -2.5, 0.1, 0.8];
        let a = acf(&x, 3).unwrap();
        let p = pacf(&x, 3).unwrap();
        assert_eq!(a.values[1], p.values[1]);
    }

    #[test]
    fn dl_recovers_ar1_coefficients() {
        // gamma(h) = phi^h for an AR(1) with unit variance
        let phi: f64 = 0.6;
        let gamma: Vec<f64> = (0..6).map(|h| phi.powi(h)).collect();
        let dl = durbin_levinson(&gamma, 5).unwrap();
        assert!((dl.pacf[0] - 0.6).abs() < 1e-14);
        assert!(dl.pacf[1..].iter().all(|p| p.abs() < 1e-14));
        assert!((dl.variances[1] - (1.0 - 0.36)).abs() < 1e-14);
        assert_eq!(dl.coefficients(3).len(), 3);
    }

    #[test]
    fn dl_breakdown_is_reported() {
        assert!(durbin_levinson(&[1.0, 1.0, 1.0], 2).is_err());
    }
}
