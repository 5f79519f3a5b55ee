//! Acceptance checks, one line per criterion.
//!
//! Criteria 1-6 need the daily passenger fixture (1095 rows, 2017-2019),
//! read from `$CYCLECAST_FIXTURE` or `fixtures/daily.csv` at the workspace
//! root. Criteria 7-12 are self-contained.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use common::Lcg;
use cyclecast_core::arma::{
    fit_arma, grid_search, optimize_level_shift, parameter_standard_errors, ArmaSpec, FitOptions,
};
use cyclecast_core::cycles::{extract_cycle, remove_cycles_traced};
use cyclecast_core::ingest::{read_daily_csv_file, split_train_test, DailySeries};
use cyclecast_core::pipeline::{
    decompose, reconstruct, rmse, run_pipeline, EvaluationReport, PipelineConfig, BASELINE_AR1,
    BASELINE_LR, BASELINE_LR_WEEKLY, BASELINE_MEAN, BASELINE_PERSISTENCE,
};
use cyclecast_core::sim::simulate_arma;
use cyclecast_core::spectral::{
    daniell_smooth, default_min_separation, dominant_periods, periodogram, Estimator,
    SpectralDensity,
};
use cyclecast_core::stats::{autocovariance, detrend, fit_linear_trend, pacf, variance};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_rel(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol * target.abs()
}

fn fixture_path() -> PathBuf {
    std::env::var_os("CYCLECAST_FIXTURE")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            let core = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
            core.ancestors().nth(2).unwrap_or(&core).join("fixtures/daily.csv")
        })
}

struct Fixture {
    series: DailySeries,
    report: EvaluationReport,
}

fn load_fixture() -> Result<Fixture, String> {
    let path = fixture_path();
    if !path.exists() {
        return Err(format!("fixture missing at {}", path.display()));
    }
    let series = read_daily_csv_file(&path).map_err(|e| e.to_string())?;
    if series.len() != 1095 {
        return Err(format!("fixture has {} rows, expected 1095", series.len()));
    }
    let config = PipelineConfig {
        run_grid: false,
        ..PipelineConfig::default()
    };
    let report = run_pipeline(&config, &series).map_err(|e| e.to_string())?;
    Ok(Fixture { series, report })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed())
}

fn criterion_1(fx: &Fixture) -> Outcome {
    let split = split_train_test(&fx.series, 61).unwrap();
    let (trend, took) = timed(|| fit_linear_trend(&split.train));
    let Ok(trend) = trend else {
        return outcome(false, "trend fit failed");
    };
    let pass = within_rel(trend.slope, -200.138, 0.01)
        && within_rel(trend.intercept, 547_356.0, 0.01)
        && took < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "slope {:.3} (target -200.138 ±1%), intercept {:.0} (target 547356 ±1%), {:?}",
            trend.slope, trend.intercept, took
        ),
    )
}

fn criterion_2(fx: &Fixture) -> Outcome {
    let split = split_train_test(&fx.series, 61).unwrap();
    let (peaks, took) = timed(|| {
        let trend = fit_linear_trend(&split.train)?;
        let x = detrend(&split.train, &trend);
        let s = daniell_smooth(&periodogram(x.values())?, 3)?;
        dominant_periods(&s, 6, default_min_separation(x.len()))
    });
    let Ok(peaks) = peaks else {
        return outcome(false, "spectrum failed");
    };
    let periods = peaks.periods();
    let mut rest: Vec<u32> = periods.clone();
    let mut ok = periods.first() == Some(&7);
    for p in [7, 30, 45, 182, 365] {
        match rest.iter().position(|&q| q == p) {
            Some(i) => {
                rest.remove(i);
            }
            None => ok = false,
        }
    }
    let short = rest.len() == 1 && peaks.peaks.iter().any(|pk| {
        pk.period == rest[0] && (3.0..=4.0).contains(&pk.exact_period)
    });
    let pass = ok && short && took < Duration::from_secs(5);
    outcome(pass, format!("periods by power {periods:?}, {took:?}"))
}

fn criterion_3(fx: &Fixture) -> Outcome {
    let Some(c) = fx.report.candidate(ArmaSpec::new(1, 0)) else {
        return outcome(false, "AR(1) candidate absent");
    };
    let (Some(m), Some(train), Some(test)) = (&c.model, c.train_rmse, c.test_rmse) else {
        return outcome(false, format!("AR(1) failed: {:?}", c.failure));
    };
    let split = split_train_test(&fx.series, 61).unwrap();
    let (_, took) = timed(|| {
        let dec = decompose(&split.train, &[7, 30, 45, 182, 365]).unwrap();
        fit_arma(dec.residuals.values(), ArmaSpec::new(1, 0), &FitOptions::default())
    });
    let phi = m.phi[0];
    let pass = (0.49..=0.55).contains(&phi)
        && within_rel(train, 20_177.38, 0.03)
        && within_rel(test, 34_880.39, 0.05)
        && took < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "phi {phi:.4} (0.49..0.55), train RMSE {train:.2} (20177.38 ±3%), test RMSE {test:.2} (34880.39 ±5%), {took:?}"
        ),
    )
}

fn criterion_4(fx: &Fixture) -> Outcome {
    let split = split_train_test(&fx.series, 61).unwrap();
    let dec = match decompose(&split.train, &[7, 30, 45, 182, 365]) {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (grid, took) = timed(|| grid_search(dec.residuals.values(), 10, 10, &FitOptions::default()));
    let g = match grid {
        Ok(g) => g,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (min_aic, min_h) = (g.min_aic_n(), g.min_hmean_n());
    let score = |p, q, pick: fn(&cyclecast_core::arma::Criteria) -> f64| {
        g.cell(p, q).and_then(|c| c.criteria.as_ref().map(pick)).unwrap_or(f64::INFINITY)
    };
    let a99 = score(9, 9, |c| c.aic_n);
    let h64 = score(6, 4, |c| c.hmean_n);
    let pass = within_rel(min_aic, 22.55, 0.005)
        && within_rel(min_h, 22.58, 0.005)
        && a99 - min_aic <= 0.02
        && h64 - min_h <= 0.02
        && took < Duration::from_secs(30 * 60);
    outcome(
        pass,
        format!(
            "min aic_n {min_aic:.4} at {} (22.55 ±0.5%), min hmean_n {min_h:.4} at {} (22.58 ±0.5%), (9,9) aic_n {a99:.4}, (6,4) hmean_n {h64:.4}, {} failures, {took:?}",
            g.best_by_aic,
            g.best_by_hmean,
            g.failures.len()
        ),
    )
}

fn criterion_5(fx: &Fixture) -> Outcome {
    let test_rmse = |p, q| {
        fx.report
            .candidate(ArmaSpec::new(p, q))
            .and_then(|c| c.test_rmse)
            .unwrap_or(f64::NAN)
    };
    let (r99, r64) = (test_rmse(9, 9), test_rmse(6, 4));
    let pass = within_rel(r99, 39_954.88, 0.10) && within_rel(r64, 37_890.48, 0.10);
    outcome(
        pass,
        format!("ARMA(9,9) test RMSE {r99:.2} (39954.88 ±10%), ARMA(6,4) {r64:.2} (37890.48 ±10%)"),
    )
}

fn criterion_6(fx: &Fixture) -> Outcome {
    let table = [
        (BASELINE_MEAN, 113_420.61, 0.02),
        (BASELINE_LR, 56_739.59, 0.02),
        (BASELINE_LR_WEEKLY, 52_615.37, 0.02),
        (BASELINE_PERSISTENCE, 38_643.50, 0.02),
        (BASELINE_AR1, 36_742.08, 0.05),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut values = Vec::new();
    for (name, target, tol) in table {
        let v = fx
            .report
            .baseline(name)
            .and_then(|b| b.test_rmse)
            .unwrap_or(f64::NAN);
        pass &= within_rel(v, target, tol);
        parts.push(format!("{name} {v:.2} ({target} ±{}%)", tol * 100.0));
        values.push(v);
    }
    let ordered = values.windows(2).all(|w| w[0] > w[1]);
    outcome(
        pass && ordered,
        format!("{}; ordering {}", parts.join(", "), if ordered { "matches" } else { "differs" }),
    )
}

fn recovery_passes(phi: &[f64], theta: &[f64], seed0: u64) -> usize {
    let spec = ArmaSpec::new(phi.len(), theta.len());
    let truth: Vec<f64> = phi.iter().chain(theta).copied().collect();
    (0..20u64)
        .filter(|s| {
            let x = simulate_arma(phi, theta, 1.0, 10_000, seed0 + s);
            let Ok(m) = fit_arma(&x, spec, &FitOptions::default()) else {
                return false;
            };
            let Ok(se) = parameter_standard_errors(&m, &x) else {
                return false;
            };
            let est: Vec<f64> = m.phi.iter().chain(&m.theta).copied().collect();
            est.iter().zip(&truth).zip(&se).all(|((e, t), s)| (e - t).abs() <= 3.0 * s)
        })
        .count()
}

fn criterion_7() -> Outcome {
    let ar1 = recovery_passes(&[0.5], &[], 1000);
    let arma21 = recovery_passes(&[1.0, -0.9], &[0.4], 2000);
    outcome(
        ar1 >= 18 && arma21 >= 18,
        format!("AR(1) {ar1}/20, ARMA(2,1) {arma21}/20 seeds within 3 SE (need 18)"),
    )
}

fn random_series(seed: u64) -> DailySeries {
    let mut rng = Lcg::new(seed);
    let n = 400 + (rng.uniform() * 800.0) as usize;
    let slope = 400.0 * rng.centered();
    let counts = (1..=n)
        .map(|t| {
            let weekly = 3e4 * ((t % 7) as f64 / 7.0 * std::f64::consts::TAU).sin();
            (4e5 + slope * t as f64 + weekly + 8e4 * rng.centered()).max(0.0) as u64
        })
        .collect();
    DailySeries::new("2017-01-01".parse().unwrap(), counts).unwrap()
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let s = random_series(seed);
        let dec = decompose(&s, &[7, 30, 45, 182, 365]).unwrap();
        let back = reconstruct(&dec.trend, &dec.cycles, dec.residuals.values(), 1);
        for (b, v) in back.iter().zip(s.values()) {
            worst = worst.max((b - v).abs());
        }
    }
    outcome(worst < 1e-6, format!("max reconstruction error {worst:.3e} over 100 series (< 1e-6)"))
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let s = random_series(500 + seed);
        let trend = fit_linear_trend(&s).unwrap();
        let x = detrend(&s, &trend);
        let scale = x.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let periods = [7, 30, 45, 182, 365];
        let out = remove_cycles_traced(&x, &periods).unwrap();
        for (step, &p) in out.steps.iter().zip(&periods) {
            worst = worst.max(extract_cycle(step, p).unwrap().amplitude() / scale);
        }
    }
    outcome(worst < 1e-9, format!("max relative phase mean after its removal {worst:.3e} (< 1e-9)"))
}

fn criterion_10() -> Outcome {
    let tone: Vec<f64> = (1..=64)
        .map(|t| (std::f64::consts::TAU * t as f64 / 8.0).cos())
        .collect();
    let s = periodogram(&tone).unwrap();
    let imax = (0..s.len()).max_by(|&a, &b| s.power[a].total_cmp(&s.power[b])).unwrap();
    let spike = s.frequencies[imax] == 0.125
        && s.power
            .iter()
            .enumerate()
            .all(|(i, v)| i == imax || *v < 1e-9 * s.power[imax]);

    let mut worst_parseval = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = Lcg::new(seed);
        let n = 16 + (rng.uniform() * 1000.0) as usize;
        let x: Vec<f64> = (0..n).map(|_| rng.centered() * 1e5).collect();
        let p = periodogram(&x).unwrap();
        let two = 2.0 * p.power.iter().sum::<f64>();
        let nyq = if n % 2 == 0 { *p.power.last().unwrap() } else { 0.0 };
        let v = variance(&x);
        worst_parseval = worst_parseval.max(((two - nyq) / n as f64 - v).abs() / v);
    }

    let mut hand = vec![0.0; 8];
    hand[1] = 3.0;
    let raw = SpectralDensity {
        frequencies: (1..=8).map(|j| j as f64 / 16.0).collect(),
        power: hand,
        estimator: Estimator::RawPeriodogram,
        n: 16,
    };
    let sm = daniell_smooth(&raw, 3).unwrap();
    let daniell = sm.power == [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];

    outcome(
        spike && worst_parseval < 1e-9 && daniell,
        format!(
            "single spike {spike}, Parseval max rel error {worst_parseval:.3e} (< 1e-9), Daniell hand example {daniell}"
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = Lcg::new(seed);
        let n = 100 + (rng.uniform() * 900.0) as usize;
        let a = 1.6 * rng.centered();
        let mut prev = 0.0;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                prev = a * prev + rng.centered();
                prev
            })
            .collect();
        let dl = pacf(&x, 20).unwrap();
        let g = autocovariance(&x, 20).unwrap();
        for h in 1..=20 {
            let m = DMatrix::from_fn(h, h, |i, j| g[i.abs_diff(j)]);
            let rhs = DVector::from_fn(h, |i, _| g[i + 1]);
            let direct = m.lu().solve(&rhs).unwrap()[h - 1];
            worst = worst.max((dl.values[h] - direct).abs());
        }
    }
    outcome(worst < 1e-8, format!("max |DL - YW| {worst:.3e} over 100 series, h <= 20 (< 1e-8)"))
}

fn criterion_12() -> Outcome {
    let mut failures = 0;
    for seed in 0..50u64 {
        let mut rng = Lcg::new(seed);
        let n = 20 + (rng.uniform() * 200.0) as usize;
        let bias = 180_000.0 * rng.centered();
        let actual: Vec<f64> = (0..n).map(|_| 4e5 + 1e5 * rng.centered()).collect();
        let pred: Vec<f64> = actual.iter().map(|a| a - bias + 5e4 * rng.centered()).collect();
        let adj = optimize_level_shift(&pred, &actual).unwrap();
        let best_scan = (-1000..=1000)
            .map(|k| {
                let c = 100.0 * k as f64;
                rmse(&pred.iter().map(|p| p + c).collect::<Vec<_>>(), &actual).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        if adj.rmse_after > best_scan * (1.0 + 1e-12) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{failures} of 50 pairs beaten by the ±100000 step-100 scan"))
}

fn main() -> ExitCode {
    let fixture = load_fixture();
    let fixture_criteria: [(u8, &str, fn(&Fixture) -> Outcome); 6] = [
        (1, "trend reproduction", criterion_1),
        (2, "cycle detection", criterion_2),
        (3, "AR(1) anchor", criterion_3),
        (4, "grid selection", criterion_4),
        (5, "high-order candidates", criterion_5),
        (6, "baseline table", criterion_6),
    ];
    let self_contained: [(u8, &str, fn() -> Outcome); 6] = [
        (7, "parameter recovery", criterion_7),
        (8, "decomposition inversion", criterion_8),
        (9, "phase-mean nulling", criterion_9),
        (10, "spectral sanity", criterion_10),
        (11, "PACF equivalence", criterion_11),
        (12, "level-shift optimality", criterion_12),
    ];

    let mut failed = 0;
    let mut report = |id: u8, name: &str, o: Outcome| {
        println!("{} [{id:>2}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    for (id, name, check) in fixture_criteria {
        let o = match &fixture {
            Ok(fx) => check(fx),
            Err(why) => outcome(false, why.clone()),
        };
        report(id, name, o);
    }
    for (id, name, check) in self_contained {
        report(id, name, check());
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
