//! Exact Gaussian likelihood of a zero-mean ARMA process by Kalman
//! filtering its state-space form.
//!
//! The state has dimension `r = max(p, q + 1)` with transition
//! `T = [φ | I; 0]` (first column the AR coefficients, ones on the
//! superdiagonal), disturbance loading `R = (1, θ_1, .., θ_{r-1})'` and the
//! observation picking the first state element. The filter runs with unit
//! innovation variance; `σ²` is concentrated out afterwards.
//!
//! Once the prediction covariance stops changing the filter switches to
//! its steady-state gain, which is exact up to the convergence tolerance.

use crate::error::{Error, Result};

const STEADY_TOL: f64 = 1e-11;
const DOUBLING_MAX_ITER: usize = 64;

pub(crate) struct StateSpace {
    r: usize,
    /// First column of `T`, zero-padded to `r`.
    phi: Vec<f64>,
    /// `R`, zero-padded to `r`.
    loading: Vec<f64>,
}

impl StateSpace {
    pub(crate) fn new(phi: &[f64], theta: &[f64]) -> Self {
        let r = phi.len().max(theta.len() + 1);
        let mut phi_pad = vec![0.0; r];
        phi_pad[..phi.len()].copy_from_slice(phi);
        let mut loading = vec![0.0; r];
        loading[0] = 1.0;
        loading[1..=theta.len()].copy_from_slice(theta);
        Self {
            r,
            phi: phi_pad,
            loading,
        }
    }

    /// `T M T'` for symmetric `M` (row-major, `r × r`).
    fn sandwich(&self, m: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let r = self.r;
        // scratch = T M
        for i in 0..r {
            for j in 0..r {
                let below = if i + 1 < r { m[(i + 1) * r + j] } else { 0.0 };
                scratch[i * r + j] = self.phi[i] * m[j] + below;
            }
        }
        // out = scratch T'
        for i in 0..r {
            for j in 0..r {
                let right = if j + 1 < r { scratch[i * r + j + 1] } else { 0.0 };
                out[i * r + j] = scratch[i * r] * self.phi[j] + right;
            }
        }
    }

    /// Unconditional state covariance: solves `P = T P T' + R R'` by the
    /// doubling iteration `P ← P + A P A'`, `A ← A²`.
    fn stationary_covariance(&self) -> Result<Vec<f64>> {
        let r = self.r;
        let mut p: Vec<f64> = (0..r * r)
            .map(|k| self.loading[k / r] * self.loading[k % r])
            .collect();
        let mut a = vec![0.0; r * r];
        for i in 0..r {
            a[i * r] = self.phi[i];
            if i + 1 < r {
                a[i * r + i + 1] = 1.0;
            }
        }
        let mut ap = vec![0.0; r * r];
        let mut next = vec![0.0; r * r];
        for _ in 0..DOUBLING_MAX_ITER {
            // ap = A P ; next = ap A'
            matmul(&a, &p, &mut ap, r);
            matmul_bt(&ap, &a, &mut next, r);
            let mut delta = 0.0f64;
            let mut scale = 0.0f64;
            for k in 0..r * r {
                p[k] += next[k];
                delta = delta.max(next[k].abs());
                scale = scale.max(p[k].abs());
            }
            if !scale.is_finite() {
                return Err(Error::Numerical("non-stationary transition".into()));
            }
            if delta <= 1e-15 * scale {
                return Ok(p);
            }
            matmul(&a, &a.clone(), &mut ap, r);
            a.copy_from_slice(&ap);
        }
        Err(Error::Numerical(
            "stationary covariance did not converge".into(),
        ))
    }
}

fn matmul(a: &[f64], b: &[f64], out: &mut [f64], r: usize) {
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = (0..r).map(|k| a[i * r + k] * b[k * r + j]).sum();
        }
    }
}

/// `a b'`
fn matmul_bt(a: &[f64], b: &[f64], out: &mut [f64], r: usize) {
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = (0..r).map(|k| a[i * r + k] * b[j * r + k]).sum();
        }
    }
}

/// Per-step filter output, with `F_t` in units of the innovation variance.
pub(crate) struct FilterOutput {
    pub predictions: Vec<f64>,
    pub innovations: Vec<f64>,
    pub variances: Vec<f64>,
    pub sum_log_f: f64,
    pub sum_scaled_sq: f64,
    /// Observed (non-missing) values.
    pub n_obs: usize,
}

impl FilterOutput {
    pub(crate) fn sigma2(&self) -> f64 {
        self.sum_scaled_sq / self.n_obs as f64
    }

    /// Log-likelihood with `σ²` at its maximiser.
    pub(crate) fn concentrated_loglik(&self) -> f64 {
        let n = self.n_obs as f64;
        -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + self.sigma2().ln() + 1.0)
            - 0.5 * self.sum_log_f
    }

    pub(crate) fn loglik_at(&self, sigma2: f64) -> f64 {
        let n = self.n_obs as f64;
        -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln()
            - 0.5 * self.sum_log_f
            - 0.5 * self.sum_scaled_sq / sigma2
    }
}

/// Runs the filter over `data`, treating NaN as missing. When `keep` is
/// false only the likelihood sums are accumulated.
pub(crate) fn filter(ss: &StateSpace, data: &[f64], keep: bool) -> Result<FilterOutput> {
    let r = ss.r;
    let mut p = ss.stationary_covariance()?;
    let mut a = vec![0.0; r];
    let mut a_filt = vec![0.0; r];
    let mut p_filt = vec![0.0; r * r];
    let mut p_next = vec![0.0; r * r];
    let mut scratch = vec![0.0; r * r];
    let mut gain = vec![0.0; r];
    let mut steady = false;
    let mut f = 0.0;
    let mut n_obs = 0usize;

    let cap = if keep { data.len() } else { 0 };
    let mut out = FilterOutput {
        predictions: Vec::with_capacity(cap),
        innovations: Vec::with_capacity(cap),
        variances: Vec::with_capacity(cap),
        sum_log_f: 0.0,
        sum_scaled_sq: 0.0,
        n_obs: 0,
    };

    for &x in data {
        if x.is_nan() {
            // missing: predict without updating
            if keep {
                out.predictions.push(a[0]);
                out.innovations.push(f64::NAN);
                out.variances.push(p[0]);
            }
            let first = a[0];
            for i in 0..r {
                let below = if i + 1 < r { a[i + 1] } else { 0.0 };
                a[i] = ss.phi[i] * first + below;
            }
            ss.sandwich(&p, &mut p_next, &mut scratch);
            for i in 0..r {
                for j in 0..r {
                    p_next[i * r + j] += ss.loading[i] * ss.loading[j];
                }
            }
            std::mem::swap(&mut p, &mut p_next);
            steady = false;
            continue;
        }
        if !steady {
            f = p[0];
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::Numerical(format!(
                    "prediction variance {f} is not positive"
                )));
            }
            for i in 0..r {
                gain[i] = p[i * r] / f;
            }
        }
        let v = x - a[0];
        n_obs += 1;
        out.sum_log_f += f.ln();
        out.sum_scaled_sq += v * v / f;
        if keep {
            out.predictions.push(a[0]);
            out.innovations.push(v);
            out.variances.push(f);
        }

        // The observation is noiseless, so the first filtered state is x.
        a_filt[0] = x;
        for i in 1..r {
            a_filt[i] = a[i] + gain[i] * v;
        }
        for i in 0..r {
            let below = if i + 1 < r { a_filt[i + 1] } else { 0.0 };
            a[i] = ss.phi[i] * x + below;
        }

        if !steady {
            for i in 0..r {
                for j in 0..r {
                    p_filt[i * r + j] = p[i * r + j] - gain[i] * p[j];
                }
            }
            for k in 0..r {
                p_filt[k] = 0.0;
                p_filt[k * r] = 0.0;
            }
            ss.sandwich(&p_filt, &mut p_next, &mut scratch);
            let mut delta = 0.0f64;
            for i in 0..r {
                for j in 0..r {
                    let k = i * r + j;
                    p_next[k] += ss.loading[i] * ss.loading[j];
                    delta = delta.max((p_next[k] - p[k]).abs());
                }
            }
            std::mem::swap(&mut p, &mut p_next);
            steady = delta < STEADY_TOL;
        }
    }
    out.n_obs = n_obs;
    Ok(out)
}
