//! Power spectrum estimates and peak picking.
//!
//! Three estimators share one frequency grid, the Fourier frequencies
//! `f_j = j / n` for `j = 1..=n/2` in cycles per day:
//!
//! * the raw periodogram `I(f_j) = |Σ_t x_t e^{-2πi f_j t}|² / n` of the
//!   mean-centred series,
//! * a Daniell (moving-average) smoothing of it,
//! * the density of a Yule-Walker AR fit with AIC-selected order.
//!
//! With this scaling, Σ over all `n - 1` non-zero frequencies of `I` equals
//! `Σ x_t²`, so the one-sided grid satisfies
//! `n · var(x) = 2 Σ_j I(f_j) − [n even] · I(1/2)`. See [`parseval_variance`].

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{autocovariance, durbin_levinson};

const MIN_PERIODOGRAM_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    RawPeriodogram,
    Daniell { span: usize },
    Ar { order: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub estimator: Estimator,
    /// Length of the series the estimate was computed from.
    pub n: usize,
}

impl SpectralDensity {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Fourier frequencies `j / n`, `j = 1..=n/2`.
pub fn fourier_frequencies(n: usize) -> Vec<f64> {
    (1..=n / 2).map(|j| j as f64 / n as f64).collect()
}

pub fn periodogram(x: &[f64]) -> Result<SpectralDensity> {
    let n = x.len();
    if n < MIN_PERIODOGRAM_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_PERIODOGRAM_LEN,
            got: n,
        });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // Indexing from t = 1 instead of 0 only rotates each coefficient's phase.
    let power = (1..=n / 2).map(|j| buf[j].norm_sqr() / n as f64).collect();
    Ok(SpectralDensity {
        frequencies: fourier_frequencies(n),
        power,
        estimator: Estimator::RawPeriodogram,
        n,
    })
}

/// Sample variance (divisor `n`) reconstructed from periodogram ordinates.
pub fn parseval_variance(s: &SpectralDensity) -> f64 {
    let n = s.n as f64;
    let twice: f64 = 2.0 * s.power.iter().sum::<f64>();
    let nyquist = if s.n % 2 == 0 {
        *s.power.last().unwrap_or(&0.0)
    } else {
        0.0
    };
    (twice - nyquist) / n
}

/// Replaces each ordinate by the mean of the `span` ordinates centred on it.
/// Beyond either end the sequence is mirrored including the edge ordinate,
/// so index `-1` reads index `0`.
pub fn daniell_smooth(s: &SpectralDensity, span: usize) -> Result<SpectralDensity> {
    if span == 0 || span % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "Daniell span must be odd and positive, got {span}"
        )));
    }
    let len = s.power.len();
    if span > len {
        return Err(Error::InvalidInput(format!(
            "Daniell span {span} exceeds the {len} ordinates"
        )));
    }
    let half = (span / 2) as isize;
    let reflect = |i: isize| -> usize {
        let len = len as isize;
        let j = if i < 0 {
            -i - 1
        } else if i >= len {
            2 * len - i - 1
        } else {
            i
        };
        j as usize
    };
    let power = (0..len as isize)
        .map(|i| {
            (-half..=half)
                .map(|d| s.power[reflect(i + d)])
                .sum::<f64>()
                / span as f64
        })
        .collect();
    Ok(SpectralDensity {
        frequencies: s.frequencies.clone(),
        power,
        estimator: Estimator::Daniell { span },
        n: s.n,
    })
}

/// Yule-Walker AR fit with the order in `0..=max_order` minimising
/// `n ln(σ²_k) + 2k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YuleWalkerFit {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub innovation_variance: f64,
    pub aic: Vec<f64>,
}

pub fn yule_walker_select(x: &[f64], max_order: usize) -> Result<YuleWalkerFit> {
    let n = x.len();
    if n <= max_order {
        return Err(Error::InsufficientData {
            needed: max_order + 1,
            got: n,
        });
    }
    let gamma = autocovariance(x, max_order)?;
    let dl = durbin_levinson(&gamma, max_order)
        .map_err(|e| Error::Singular(format!("Yule-Walker system: {e}")))?;
    let aic: Vec<f64> = dl
        .variances
        .iter()
        .enumerate()
        .map(|(k, v)| n as f64 * v.ln() + 2.0 * k as f64)
        .collect();
    let order = aic
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    Ok(YuleWalkerFit {
        order,
        coefficients: dl.coefficients(order).to_vec(),
        innovation_variance: dl.variances[order],
        aic,
    })
}

/// `σ² / |1 − Σ_j φ_j e^{−2πiνj}|²` at each frequency.
pub fn ar_density(coefficients: &[f64], sigma2: f64, frequencies: &[f64]) -> Vec<f64> {
    frequencies
        .iter()
        .map(|&nu| {
            let mut z = Complex64::new(1.0, 0.0);
            for (j, phi) in coefficients.iter().enumerate() {
                z -= phi * Complex64::from_polar(1.0, -2.0 * PI * nu * (j + 1) as f64);
            }
            sigma2 / z.norm_sqr()
        })
        .collect()
}

pub fn ar_spectrum(x: &[f64], max_order: usize) -> Result<SpectralDensity> {
    let fit = yule_walker_select(x, max_order)?;
    let frequencies = fourier_frequencies(x.len());
    let power = ar_density(&fit.coefficients, fit.innovation_variance, &frequencies);
    Ok(SpectralDensity {
        frequencies,
        power,
        estimator: Estimator::Ar { order: fit.order },
        n: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// `1 / frequency` rounded to whole days.
    pub period: u32,
    pub exact_period: f64,
    pub frequency: f64,
    pub power: f64,
}

/// Peaks sorted by descending power.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn periods(&self) -> Vec<u32> {
        self.peaks.iter().map(|p| p.period).collect()
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}

/// Default minimum peak separation, two Fourier frequency steps.
pub fn default_min_separation(n: usize) -> f64 {
    2.0 / n as f64
}

/// The `k` strongest interior local maxima, accepted greedily by power.
/// A candidate is skipped if it lies closer than `min_separation` to an
/// accepted peak or rounds to an already accepted period.
pub fn dominant_periods(s: &SpectralDensity, k: usize, min_separation: f64) -> Result<PeakSet> {
    if s.is_empty() {
        return Err(Error::Empty("spectral density has no ordinates".into()));
    }
    let p = &s.power;
    let mut candidates: Vec<usize> = (1..p.len().saturating_sub(1))
        .filter(|&i| p[i] > p[i - 1] && p[i] > p[i + 1])
        .collect();
    candidates.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));

    let mut peaks: Vec<Peak> = Vec::with_capacity(k);
    for i in candidates {
        if peaks.len() == k {
            break;
        }
        let f = s.frequencies[i];
        let exact_period = 1.0 / f;
        let period = exact_period.round() as u32;
        let clashes = peaks
            .iter()
            .any(|q| (q.frequency - f).abs() < min_separation || q.period == period);
        if !clashes {
            peaks.push(Peak {
                period,
                exact_period,
                frequency: f,
                power: p[i],
            });
        }
    }
    Ok(PeakSet { peaks })
}
