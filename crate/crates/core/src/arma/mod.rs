//! Zero-mean ARMA(p, q) models fitted by exact Gaussian maximum likelihood.
//!
//! The model is `x_t = Σ φ_i x_{t-i} + ε_t + Σ θ_j ε_{t-j}` with no mean
//! term: inputs are expected to be residuals that are already centred.
//!
//! Fitting maximises the likelihood from the Kalman filter in [`kalman`]
//! with `σ²` concentrated out. The optimiser works on unconstrained
//! values mapped through partial autocorrelations, so every candidate it
//! evaluates is stationary and invertible. It starts from a two-stage
//! long-autoregression estimate and retries from seeded perturbations of
//! it when a run does not converge.

mod grid;
mod init;
mod kalman;
mod optim;
mod transform;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::rmse;
use kalman::{filter, StateSpace};
use optim::{minimize, BfgsOptions, Minimum};
use transform::{constrain_ar, constrain_ma, unconstrain_ar, unconstrain_ma};

pub use grid::{grid_search, GridCell, GridFailure, GridResult};

pub use rustfft::num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArmaSpec {
    pub p: usize,
    pub q: usize,
}

impl ArmaSpec {
    pub const fn new(p: usize, q: usize) -> Self {
        Self { p, q }
    }

    /// Free parameters including the innovation variance.
    pub fn n_params(&self) -> usize {
        self.p + self.q + 1
    }
}

impl std::fmt::Display for ArmaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARMA({}, {})", self.p, self.q)
    }
}

impl std::str::FromStr for ArmaSpec {
    type Err = Error;

    /// Parses `p,q`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("expected `p,q`, got `{s}`"));
        let (p, q) = s.split_once(',').ok_or_else(bad)?;
        Ok(Self::new(
            p.trim().parse().map_err(|_| bad())?,
            q.trim().parse().map_err(|_| bad())?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Extra attempts from perturbed starts when a run does not converge.
    pub restarts: usize,
    pub seed: u64,
    /// Minimise the conditional sum of squares first and start the exact
    /// likelihood search from there.
    pub css_warm_start: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            grad_tol: 1e-7,
            restarts: 5,
            seed: 0x5eed,
            css_warm_start: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaModel {
    pub spec: ArmaSpec,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    pub attempts: usize,
}

impl ArmaModel {
    /// A model with fixed coefficients, for prediction without fitting.
    pub fn from_coefficients(phi: Vec<f64>, theta: Vec<f64>, sigma2: f64) -> Self {
        Self {
            spec: ArmaSpec::new(phi.len(), theta.len()),
            phi,
            theta,
            sigma2,
            loglik: f64::NAN,
            n: 0,
            converged: true,
            iterations: 0,
            attempts: 0,
        }
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::new(&self.phi, &self.theta)
    }

    /// Roots of `1 - Σ φ_i z^i`.
    pub fn ar_roots(&self) -> Vec<Complex64> {
        let neg: Vec<f64> = self.phi.iter().map(|v| -v).collect();
        polynomial_roots(&neg)
    }

    /// Roots of `1 + Σ θ_j z^j`.
    pub fn ma_roots(&self) -> Vec<Complex64> {
        polynomial_roots(&self.theta)
    }

    pub fn is_stationary(&self) -> bool {
        transform::is_stationary(&self.phi)
    }

    pub fn is_invertible(&self) -> bool {
        transform::is_invertible(&self.theta)
    }

    /// Exact log-likelihood of `x` under this model, concentrating `σ²`.
    pub fn concentrated_loglik(&self, x: &[f64]) -> Result<f64> {
        Ok(filter(&self.state_space(), x, false)?.concentrated_loglik())
    }

    /// Exact log-likelihood of `x` at the model's own `σ²`.
    pub fn loglik_at_sigma2(&self, x: &[f64]) -> Result<f64> {
        Ok(filter(&self.state_space(), x, false)?.loglik_at(self.sigma2))
    }
}

/// Roots of `1 + c_1 z + ... + c_k z^k` via the companion matrix of the
/// reversed polynomial. Trailing zero coefficients lower the degree.
pub fn polynomial_roots(c: &[f64]) -> Vec<Complex64> {
    let degree = c.iter().rposition(|v| *v != 0.0).map_or(0, |i| i + 1);
    if degree == 0 {
        return Vec::new();
    }
    // z is a root iff λ = 1/z solves λ^k + c_1 λ^{k-1} + ... + c_k = 0
    let companion = DMatrix::from_fn(degree, degree, |i, j| {
        if i == 0 {
            -c[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|lambda| Complex64::new(1.0, 0.0) / Complex64::new(lambda.re, lambda.im))
        .collect()
}

fn split_params(u: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    (constrain_ar(&u[..p]), constrain_ma(&u[p..]))
}

/// Negative concentrated log-likelihood per observation.
fn objective(x: &[f64], p: usize) -> impl Fn(&[f64]) -> f64 + '_ {
    move |u: &[f64]| {
        let (phi, theta) = split_params(u, p);
        match filter(&StateSpace::new(&phi, &theta), x, false) {
            Ok(out) => -out.concentrated_loglik() / x.len() as f64,
            Err(_) => f64::INFINITY,
        }
    }
}

fn css_objective(x: &[f64], p: usize) -> impl Fn(&[f64]) -> f64 + '_ {
    move |u: &[f64]| {
        let (phi, theta) = split_params(u, p);
        let ss = init::css(x, &phi, &theta);
        0.5 * (ss / (x.len() - p) as f64).ln()
    }
}

/// Derives a per-spec seed so grid cells do not share perturbations.
fn spec_seed(seed: u64, spec: ArmaSpec) -> u64 {
    seed ^ ((spec.p as u64) << 40) ^ ((spec.q as u64) << 20) ^ 0x9e37_79b9_7f4a_7c15
}

pub fn fit_arma(x: &[f64], spec: ArmaSpec, opts: &FitOptions) -> Result<ArmaModel> {
    let ArmaSpec { p, q } = spec;
    let n = x.len();
    let fail = |reason: String| Error::FitFailed { p, q, reason };
    if p + q == 0 {
        return Err(fail("at least one AR or MA term is required".into()));
    }
    if n <= p + q + 1 {
        return Err(Error::InsufficientData {
            needed: p + q + 2,
            got: n,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series contains non-finite values".into()));
    }
    if crate::stats::variance(x) <= 0.0 {
        return Err(fail("series has zero variance".into()));
    }

    let (phi0, theta0) = init::hannan_rissanen(x, p, q);
    let mut start = unconstrain_ar(&phi0).unwrap_or_else(|| vec![0.0; p]);
    start.extend(unconstrain_ma(&theta0).unwrap_or_else(|| vec![0.0; q]));

    let bfgs = BfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol,
        ..BfgsOptions::default()
    };
    if opts.css_warm_start {
        let warm = minimize(css_objective(x, p), &start, bfgs);
        if warm.f.is_finite() {
            start = warm.x;
        }
    }

    let f = objective(x, p);
    let mut rng = ChaCha8Rng::seed_from_u64(spec_seed(opts.seed, spec));
    let jitter = Normal::new(0.0, 0.5).expect("valid sd");
    let mut best: Option<Minimum> = None;
    let mut attempts = 0;
    for attempt in 0..=opts.restarts {
        let x0: Vec<f64> = if attempt == 0 {
            start.clone()
        } else {
            start.iter().map(|v| v + jitter.sample(&mut rng)).collect()
        };
        let run = minimize(&f, &x0, bfgs);
        attempts += 1;
        let better = match &best {
            None => true,
            Some(b) => {
                (run.converged && !b.converged)
                    || (run.converged == b.converged && run.f < b.f)
            }
        };
        if better {
            best = Some(run);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    let best = best.expect("at least one attempt");
    if !best.f.is_finite() {
        return Err(fail(format!(
            "likelihood not finite from any of {attempts} starting points"
        )));
    }

    let (phi, theta) = split_params(&best.x, p);
    let out = filter(&StateSpace::new(&phi, &theta), x, false).map_err(|e| fail(e.to_string()))?;
    Ok(ArmaModel {
        spec,
        phi,
        theta,
        sigma2: out.sigma2(),
        loglik: out.concentrated_loglik(),
        n,
        converged: best.converged,
        iterations: best.iterations,
        attempts,
    })
}

/// Information criteria, both raw and divided by the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub aic: f64,
    pub bic: f64,
    pub aic_n: f64,
    pub bic_n: f64,
    /// Harmonic mean of `aic_n` and `bic_n`.
    pub hmean_n: f64,
}

pub fn information_criteria(m: &ArmaModel) -> Result<Criteria> {
    if !m.converged {
        return Err(Error::FitFailed {
            p: m.spec.p,
            q: m.spec.q,
            reason: "criteria are undefined for a non-converged fit".into(),
        });
    }
    if m.n == 0 {
        return Err(Error::InvalidInput("model carries no sample size".into()));
    }
    let k = m.spec.n_params() as f64;
    let n = m.n as f64;
    let aic = 2.0 * k - 2.0 * m.loglik;
    let bic = k * n.ln() - 2.0 * m.loglik;
    let (aic_n, bic_n) = (aic / n, bic / n);
    Ok(Criteria {
        aic,
        bic,
        aic_n,
        bic_n,
        hmean_n: 2.0 * aic_n * bic_n / (aic_n + bic_n),
    })
}

/// One-step-ahead predictions `E[x_t | x_1..x_{t-1}]`; the first is 0.
pub fn predict_in_sample(m: &ArmaModel, x: &[f64]) -> Result<Vec<f64>> {
    Ok(filter(&m.state_space(), x, true)?.predictions)
}

/// Rolling one-step-ahead predictions over `test`, conditioning each on all
/// observed values before it. Parameters stay fixed.
pub fn forecast_rolling(m: &ArmaModel, train: &[f64], test: &[f64]) -> Result<Vec<f64>> {
    let mut all = train.to_vec();
    all.extend_from_slice(test);
    let preds = filter(&m.state_space(), &all, true)?.predictions;
    Ok(preds[train.len()..].to_vec())
}

/// `horizon` forecasts from the end of `train` without further updates.
pub fn forecast_multi_step(m: &ArmaModel, train: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let mut all = train.to_vec();
    all.extend(std::iter::repeat_n(f64::NAN, horizon));
    let preds = filter(&m.state_space(), &all, true)?.predictions;
    Ok(preds[train.len()..].to_vec())
}

/// Asymptotic standard errors of `(φ, θ)` from the numerical Hessian of
/// the concentrated log-likelihood at the fitted values.
pub fn parameter_standard_errors(m: &ArmaModel, x: &[f64]) -> Result<Vec<f64>> {
    let p = m.spec.p;
    let mut params = m.phi.clone();
    params.extend_from_slice(&m.theta);
    let d = params.len();
    let ll = |v: &[f64]| -> f64 {
        let (phi, theta) = v.split_at(p);
        filter(&StateSpace::new(phi, theta), x, false)
            .map(|o| o.concentrated_loglik())
            .unwrap_or(f64::NAN)
    };
    let h = 1e-4;
    let mut probe = params.clone();
    let mut at = |i: usize, di: f64, j: usize, dj: f64| {
        probe.copy_from_slice(&params);
        probe[i] += di;
        probe[j] += dj;
        ll(&probe)
    };
    let mut info = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) + at(i, -h, j, -h))
                / (4.0 * h * h);
            info[(i, j)] = -v;
            info[(j, i)] = -v;
        }
    }
    if info.iter().any(|v: &f64| !v.is_finite()) {
        return Err(Error::Numerical(
            "likelihood not finite around the estimate".into(),
        ));
    }
    let cov = info
        .cholesky()
        .ok_or_else(|| Error::Numerical("observed information is not positive definite".into()))?
        .inverse();
    Ok((0..d).map(|i| cov[(i, i)].sqrt()).collect())
}

/// Constant added to predictions to remove their mean bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelAdjustment {
    pub constant: f64,
    pub rmse_before: f64,
    pub rmse_after: f64,
}

impl LevelAdjustment {
    pub fn none(rmse: f64) -> Self {
        Self {
            constant: 0.0,
            rmse_before: rmse,
            rmse_after: rmse,
        }
    }

    pub fn apply(&self, pred: &[f64]) -> Vec<f64> {
        pred.iter().map(|v| v + self.constant).collect()
    }
}

/// The RMSE-minimising constant shift, `mean(actual - pred)`.
pub fn optimize_level_shift(pred: &[f64], actual: &[f64]) -> Result<LevelAdjustment> {
    let rmse_before = rmse(pred, actual)?;
    let constant =
        actual.iter().zip(pred).map(|(a, p)| a - p).sum::<f64>() / actual.len() as f64;
    let shifted: Vec<f64> = pred.iter().map(|v| v + constant).collect();
    let rmse_after = rmse(&shifted, actual)?;
    Ok(LevelAdjustment {
        constant,
        rmse_before,
        rmse_after,
    })
}
