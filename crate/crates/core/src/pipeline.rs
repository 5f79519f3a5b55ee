//! End-to-end experiment: decompose the training range, fit the candidate
//! models, forecast the held-out range and score everything against a set
//! of simple baselines.
//!
//! Every fitted quantity (trend, phase means, ARMA parameters, level shift)
//! is computed from the training range only. Test values are used solely
//! as the observed history of the rolling forecast and for scoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arma::{
    fit_arma, forecast_multi_step, forecast_rolling, grid_search, information_criteria,
    optimize_level_shift, predict_in_sample, ArmaModel, ArmaSpec, Criteria, FitOptions, GridResult,
    LevelAdjustment,
};
use crate::cycles::{extract_cycle, remove_cycles_sequential, CycleSet};
use crate::error::{Error, Result, StageExt};
use crate::ingest::{split_train_test, DailySeries, SplitSeries};
use crate::spectral::{
    ar_spectrum, daniell_smooth, default_min_separation, dominant_periods, periodogram, PeakSet,
};
use crate::stats::{adf_test, detrend, fit_linear_trend, AdfResult, ResidualSeries, TrendModel};

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::InvalidInput(format!(
            "prediction length {} does not match actual length {}",
            pred.len(),
            actual.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("no values to score".into()));
    }
    let sse: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Passenger-scale predictions `trend(t) + cycles(t) + residual_pred[i]`
/// for `t = t_start + i`.
pub fn reconstruct(
    trend: &TrendModel,
    cs: &CycleSet,
    residual_pred: &[f64],
    t_start: usize,
) -> Vec<f64> {
    residual_pred
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = t_start + i;
            trend.value_at(t) + cs.value_at(t) + r
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMode {
    /// One step ahead, conditioning on every observed day before the target.
    #[default]
    Rolling,
    /// All horizons from the end of the training range.
    MultiStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub holdout_days: usize,
    pub cycle_periods: Vec<usize>,
    pub p_max: usize,
    pub q_max: usize,
    /// Candidate orders written `p,q`.
    #[serde(with = "spec_strings")]
    pub candidate_specs: Vec<ArmaSpec>,
    /// Train-optimal level shift per candidate, parallel to `candidate_specs`.
    pub level_adjust: Vec<bool>,
    pub run_grid: bool,
    /// Append the grid's AIC and harmonic-mean winners to the candidates.
    pub append_grid_specs: bool,
    pub forecast_mode: ForecastMode,
    pub daniell_span: usize,
    pub ar_max_order: usize,
    pub peaks: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            holdout_days: 61,
            cycle_periods: vec![7, 30, 45, 182, 365],
            p_max: 10,
            q_max: 10,
            candidate_specs: vec![ArmaSpec::new(9, 9), ArmaSpec::new(6, 4), ArmaSpec::new(1, 0)],
            level_adjust: vec![true, true, false],
            run_grid: true,
            append_grid_specs: false,
            forecast_mode: ForecastMode::Rolling,
            daniell_span: 3,
            ar_max_order: 30,
            peaks: 6,
            seed: FitOptions::default().seed,
            restarts: FitOptions::default().restarts,
            max_iter: FitOptions::default().max_iter,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.holdout_days == 0 {
            return bad("holdout_days must be at least 1".into());
        }
        if let Some(p) = self.cycle_periods.iter().find(|p| **p < 2) {
            return bad(format!("cycle period {p} is shorter than 2 days"));
        }
        if self.level_adjust.len() != self.candidate_specs.len() {
            return bad(format!(
                "level_adjust has {} entries for {} candidate specs",
                self.level_adjust.len(),
                self.candidate_specs.len()
            ));
        }
        if let Some(s) = self.candidate_specs.iter().find(|s| s.p + s.q == 0) {
            return bad(format!("candidate {s} has no terms"));
        }
        if self.run_grid && (self.p_max == 0 || self.q_max == 0) {
            return bad("grid bounds must be at least 1".into());
        }
        if self.append_grid_specs && !self.run_grid {
            return bad("append_grid_specs needs run_grid".into());
        }
        if self.daniell_span == 0 || self.daniell_span % 2 == 0 {
            return bad(format!("daniell_span must be odd, got {}", self.daniell_span));
        }
        Ok(())
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            seed: self.seed,
            restarts: self.restarts,
            max_iter: self.max_iter,
            ..FitOptions::default()
        }
    }
}

mod spec_strings {
    use super::ArmaSpec;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(specs: &[ArmaSpec], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(specs.iter().map(|x| format!("{},{}", x.p, x.q)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<ArmaSpec>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

/// Training-range decomposition into trend, cycles and final residuals.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub trend: TrendModel,
    pub detrended: ResidualSeries,
    pub cycles: CycleSet,
    pub residuals: ResidualSeries,
}

pub fn decompose(train: &DailySeries, periods: &[usize]) -> Result<Decomposition> {
    let trend = fit_linear_trend(train).stage("trend")?;
    let detrended = detrend(train, &trend);
    let (residuals, cycles) = if periods.is_empty() {
        (detrended.clone(), CycleSet::default())
    } else {
        remove_cycles_sequential(&detrended, periods).stage("cycles")?
    };
    Ok(Decomposition {
        trend,
        detrended,
        cycles,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Peaks of the smoothed periodogram of the detrended series.
    pub peaks: PeakSet,
    pub ar_order: usize,
    pub ar_peaks: PeakSet,
    /// Peaks left in the smoothed periodogram after cycle removal.
    pub final_peaks: PeakSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub spec: ArmaSpec,
    pub model: Option<ArmaModel>,
    pub criteria: Option<Criteria>,
    pub level_adjust: bool,
    pub adjustment: Option<LevelAdjustment>,
    pub train_rmse: Option<f64>,
    pub test_rmse: Option<f64>,
    /// Passenger-scale predictions, level shift included.
    pub train_predictions: Vec<f64>,
    pub test_predictions: Vec<f64>,
    /// Residual-scale predictions on the training range.
    pub residual_predictions: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub name: String,
    pub test_rmse: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: PipelineConfig,
    pub train_start: chrono::NaiveDate,
    pub test_start: chrono::NaiveDate,
    pub n_train: usize,
    pub n_test: usize,
    pub trend: TrendModel,
    pub adf_detrended: Option<AdfResult>,
    pub adf_final: Option<AdfResult>,
    pub spectrum: Option<SpectralSummary>,
    pub cycles: CycleSet,
    pub candidates: Vec<CandidateReport>,
    pub grid: Option<GridResult>,
    pub baselines: Vec<BaselineRow>,
    pub failures: Vec<StageFailure>,
}

impl EvaluationReport {
    pub fn candidate(&self, spec: ArmaSpec) -> Option<&CandidateReport> {
        self.candidates.iter().find(|c| c.spec == spec)
    }

    pub fn baseline(&self, name: &str) -> Option<&BaselineRow> {
        self.baselines.iter().find(|b| b.name == name)
    }
}

/// Minimum useful training length beyond the holdout.
const MIN_TRAIN_DAYS: usize = 30;

pub fn run_pipeline(config: &PipelineConfig, series: &DailySeries) -> Result<EvaluationReport> {
    config.validate()?;
    if series.len() <= config.holdout_days + MIN_TRAIN_DAYS {
        return Err(Error::InvalidInput(format!(
            "a {}-day series is too short for a {}-day holdout",
            series.len(),
            config.holdout_days
        )));
    }
    let split = split_train_test(series, config.holdout_days).stage("split")?;
    let dec = decompose(&split.train, &config.cycle_periods)?;
    let mut failures = Vec::new();
    let mut record = |stage: &str, e: &Error| {
        failures.push(StageFailure {
            stage: stage.into(),
            message: e.to_string(),
        })
    };

    let adf_detrended = adf_test(dec.detrended.values())
        .map_err(|e| record("adf_detrended", &e))
        .ok();
    let adf_final = adf_test(dec.residuals.values())
        .map_err(|e| record("adf_final", &e))
        .ok();
    let spectrum = spectral_summary(config, &dec)
        .map_err(|e| record("spectrum", &e))
        .ok();

    let opts = config.fit_options();
    let x = dec.residuals.values();
    let degenerate = degenerate_reason(x, split.train.values().as_slice());
    let grid = if !config.run_grid {
        None
    } else if let Some(reason) = &degenerate {
        record("grid", &Error::Numerical(reason.clone()));
        None
    } else {
        grid_search(x, config.p_max, config.q_max, &opts)
            .map_err(|e| record("grid", &e))
            .ok()
    };

    let mut specs: Vec<(ArmaSpec, bool)> = config
        .candidate_specs
        .iter()
        .copied()
        .zip(config.level_adjust.iter().copied())
        .collect();
    if config.append_grid_specs {
        if let Some(g) = &grid {
            for s in [g.best_by_aic, g.best_by_hmean] {
                if !specs.iter().any(|(c, _)| *c == s) {
                    specs.push((s, true));
                }
            }
        }
    }

    let test_residuals = residuals_for(&split.test, series_offset(&split), &dec);
    let candidates: Vec<CandidateReport> = specs
        .par_iter()
        .map(|&(spec, adjust)| {
            evaluate_candidate(
                config,
                &split,
                &dec,
                &test_residuals,
                spec,
                adjust,
                degenerate.as_deref(),
                &opts,
            )
        })
        .collect();
    for c in &candidates {
        if let Some(f) = &c.failure {
            record(&format!("candidate {}", c.spec), &Error::Numerical(f.clone()));
        }
    }

    let baselines = baseline_suite(&split, &dec.trend, &opts);
    for b in &baselines {
        if let Some(f) = &b.failure {
            record(&format!("baseline {}", b.name), &Error::Numerical(f.clone()));
        }
    }

    Ok(EvaluationReport {
        config: config.clone(),
        train_start: split.train.start_date(),
        test_start: split.test.start_date(),
        n_train: split.train.len(),
        n_test: split.test.len(),
        trend: dec.trend,
        adf_detrended,
        adf_final,
        spectrum,
        cycles: dec.cycles,
        candidates,
        grid,
        baselines,
        failures,
    })
}

fn series_offset(split: &SplitSeries) -> usize {
    split.train.len() + 1
}

/// Residuals of `part` under the training decomposition, with `part`
/// starting at absolute index `t_start`.
fn residuals_for(part: &DailySeries, t_start: usize, dec: &Decomposition) -> Vec<f64> {
    let fitted = reconstruct(&dec.trend, &dec.cycles, &vec![0.0; part.len()], t_start);
    part.values().iter().zip(fitted).map(|(v, f)| v - f).collect()
}

/// Residuals too small relative to the data to carry any dynamics.
fn degenerate_reason(residuals: &[f64], data: &[f64]) -> Option<String> {
    let scale = data.iter().map(|v| v.abs()).sum::<f64>() / data.len().max(1) as f64;
    let sd = crate::stats::variance(residuals).sqrt();
    (sd < 1e-9 * scale.max(1.0)).then(|| {
        format!("residual standard deviation {sd:.3e} is negligible; nothing to model")
    })
}

fn spectral_summary(config: &PipelineConfig, dec: &Decomposition) -> Result<SpectralSummary> {
    let smoothed = |x: &[f64]| -> Result<PeakSet> {
        let raw = periodogram(x)?;
        let s = daniell_smooth(&raw, config.daniell_span)?;
        dominant_periods(&s, config.peaks, default_min_separation(x.len()))
    };
    let x = dec.detrended.values();
    let ar = ar_spectrum(x, config.ar_max_order)?;
    let ar_order = match ar.estimator {
        crate::spectral::Estimator::Ar { order } => order,
        _ => unreachable!("ar_spectrum reports its own order"),
    };
    Ok(SpectralSummary {
        peaks: smoothed(x)?,
        ar_order,
        ar_peaks: dominant_periods(&ar, config.peaks, default_min_separation(x.len()))?,
        final_peaks: smoothed(dec.residuals.values())?,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_candidate(
    config: &PipelineConfig,
    split: &SplitSeries,
    dec: &Decomposition,
    test_residuals: &[f64],
    spec: ArmaSpec,
    adjust: bool,
    degenerate: Option<&str>,
    opts: &FitOptions,
) -> CandidateReport {
    let mut report = CandidateReport {
        spec,
        model: None,
        criteria: None,
        level_adjust: adjust,
        adjustment: None,
        train_rmse: None,
        test_rmse: None,
        train_predictions: Vec::new(),
        test_predictions: Vec::new(),
        residual_predictions: Vec::new(),
        failure: None,
    };
    if let Some(reason) = degenerate {
        report.failure = Some(reason.to_string());
        return report;
    }
    let result = (|| -> Result<()> {
        let x = dec.residuals.values();
        let model = fit_arma(x, spec, opts)?;
        report.criteria = information_criteria(&model).ok();
        let resid_train = predict_in_sample(&model, x)?;
        let resid_test = match config.forecast_mode {
            ForecastMode::Rolling => forecast_rolling(&model, x, test_residuals)?,
            ForecastMode::MultiStep => forecast_multi_step(&model, x, test_residuals.len())?,
        };
        let train_actual = split.train.values();
        let test_actual = split.test.values();
        let train_pred = reconstruct(&dec.trend, &dec.cycles, &resid_train, 1);
        let test_pred =
            reconstruct(&dec.trend, &dec.cycles, &resid_test, series_offset(split));
        let adjustment = if adjust {
            optimize_level_shift(&train_pred, &train_actual)?
        } else {
            LevelAdjustment::none(rmse(&train_pred, &train_actual)?)
        };
        let train_pred = adjustment.apply(&train_pred);
        let test_pred = adjustment.apply(&test_pred);
        report.train_rmse = Some(adjustment.rmse_after);
        report.test_rmse = Some(rmse(&test_pred, &test_actual)?);
        report.adjustment = Some(adjustment);
        report.train_predictions = train_pred;
        report.test_predictions = test_pred;
        report.residual_predictions = resid_train;
        report.model = Some(model);
        Ok(())
    })();
    if let Err(e) = result {
        report.failure = Some(e.to_string());
    }
    report
}

pub const BASELINE_MEAN: &str = "mean";
pub const BASELINE_LR: &str = "linear_regression";
pub const BASELINE_LR_WEEKLY: &str = "linear_regression_7day";
pub const BASELINE_PERSISTENCE: &str = "persistence";
pub const BASELINE_AR1: &str = "ar1_no_cycles";

/// Test RMSE of the simple comparison models, in a fixed order.
pub fn baseline_suite(split: &SplitSeries, trend: &TrendModel, opts: &FitOptions) -> Vec<BaselineRow> {
    let train = split.train.values();
    let test = split.test.values();
    let t0 = series_offset(split);
    let h = test.len();

    let mean = || {
        let m = crate::stats::mean(&train);
        rmse(&vec![m; h], &test)
    };
    let lr = || rmse(&trend.values_from(t0, h), &test);
    let lr_weekly = || {
        let weekly = extract_cycle(&detrend(&split.train, trend), 7)?;
        let pred: Vec<f64> = (t0..t0 + h)
            .map(|t| trend.value_at(t) + weekly.value_at(t))
            .collect();
        rmse(&pred, &test)
    };
    let persistence = || {
        let mut pred = Vec::with_capacity(h);
        pred.push(*train.last().ok_or_else(|| Error::Empty("training range".into()))?);
        pred.extend_from_slice(&test[..h - 1]);
        rmse(&pred, &test)
    };
    let ar1 = || {
        let x = detrend(&split.train, trend);
        let test_resid: Vec<f64> = test
            .iter()
            .enumerate()
            .map(|(i, v)| v - trend.value_at(t0 + i))
            .collect();
        let model = fit_arma(x.values(), ArmaSpec::new(1, 0), opts)?;
        let resid_pred = forecast_rolling(&model, x.values(), &test_resid)?;
        let pred = reconstruct(trend, &CycleSet::default(), &resid_pred, t0);
        rmse(&pred, &test)
    };

    let row = |name: &str, r: Result<f64>| match r {
        Ok(v) => BaselineRow {
            name: name.into(),
            test_rmse: Some(v),
            failure: None,
        },
        Err(e) => BaselineRow {
            name: name.into(),
            test_rmse: None,
            failure: Some(e.to_string()),
        },
    };
    vec![
        row(BASELINE_MEAN, mean()),
        row(BASELINE_LR, lr()),
        row(BASELINE_LR_WEEKLY, lr_weekly()),
        row(BASELINE_PERSISTENCE, persistence()),
        row(BASELINE_AR1, ar1()),
    ]
}
