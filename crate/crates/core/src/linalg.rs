//! Least squares and small dense solves shared by the regression-based
//! estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Classical OLS fit of `y` on the columns of a design matrix.
#[derive(Debug, Clone)]
pub(crate) struct OlsFit {
    pub coef: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Residual variance with divisor `n - k`.
    pub sigma2: f64,
    pub df: usize,
}

/// Solves least squares by Householder QR; standard errors come from
/// `sigma2 * (X'X)^-1 = sigma2 * R^-1 R^-T`.
pub(crate) fn ols(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, k) = design.shape();
    if n <= k {
        return Err(Error::InsufficientData {
            needed: k + 1,
            got: n,
        });
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= 1e-12 * diag_max.max(f64::MIN_POSITIVE)) {
        return Err(Error::Singular("design matrix is rank deficient".into()));
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let fitted = design * &coef;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let df = n - k;
    let sigma2 = residuals.iter().map(|e| e * e).sum::<f64>() / df as f64;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Singular("cannot invert R".into()))?;
    let std_err = (0..k)
        .map(|i| (sigma2 * r_inv.row(i).norm_squared()).sqrt())
        .collect();

    Ok(OlsFit {
        coef: coef.iter().copied().collect(),
        std_err,
        sigma2,
        df,
    })
}

/// Least-squares coefficients only, for regressions whose standard errors
/// are not needed.
pub(crate) fn lstsq(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<f64>> {
    let (n, k) = design.shape();
    if n < k {
        return Err(Error::InsufficientData { needed: k, got: n });
    }
    let svd = design.clone().svd(true, true);
    let sol = svd
        .solve(y, 1e-12)
        .map_err(|e| Error::Singular(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}
