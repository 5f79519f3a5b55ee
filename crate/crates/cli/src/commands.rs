use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::json;

use cyclecast_core::arma::{
    fit_arma, grid_search, information_criteria, parameter_standard_errors, ArmaSpec, FitOptions,
    GridResult,
};
use cyclecast_core::cycles::remove_cycles_traced;
use cyclecast_core::ingest::{
    aggregate_trip_files, calendar_aggregates, read_daily_csv, split_train_test, trip_files_in,
    write_daily_csv, AggregateOptions, DailySeries, DateWindow,
};
use cyclecast_core::pipeline::{decompose, run_pipeline, ForecastMode, PipelineConfig};
use cyclecast_core::spectral::{
    ar_spectrum, daniell_smooth, default_min_separation, dominant_periods, periodogram,
    SpectralDensity,
};
use cyclecast_core::stats::{
    acf, adf_test, detrend, fit_linear_trend, pacf, read_residual_csv, write_residual_csv,
    CorrelogramResult, ResidualSeries,
};

use crate::output::Outputs;
use crate::plot::{emit_plot, Figure, PlotData, PlotKind, Series};
use crate::{AggregateArgs, AnalyzeArgs, Classify, CyclesArgs, Failure, FitArgs, Global, RunArgs, SpectrumArgs};

type CmdResult = Result<(), Failure>;

const DAY_AXIS: &str = "day index t (days since first training day + 1)";
const PASSENGERS: &str = "passengers per day";

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("cannot open input {}", path.display()))
        .invalid()
}

fn read_daily(path: &Path) -> Result<DailySeries, Failure> {
    read_daily_csv(open(path)?)
        .with_context(|| format!("reading {}", path.display()))
        .invalid()
}

fn read_residuals(path: &Path) -> Result<ResidualSeries, Failure> {
    read_residual_csv(open(path)?)
        .with_context(|| format!("reading {}", path.display()))
        .invalid()
}

fn summary(global: &Global, value: serde_json::Value, human: String) {
    let text = if global.json {
        serde_json::to_string_pretty(&value).expect("summary serialises") + "\n"
    } else {
        human
    };
    // A closed pipe downstream is not a failure of the command.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn finish(outputs: Outputs) -> Result<Vec<PathBuf>, Failure> {
    outputs.check_inputs().invalid()?;
    outputs.commit().compute()
}

fn plot(kind: PlotKind, fig: &Figure, data: PlotData) -> Result<String, Failure> {
    emit_plot(kind, fig, data).compute()
}

fn residual_csv(x: &ResidualSeries) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write_residual_csv(x, &mut buf)?;
    Ok(buf)
}

fn fit_options(global: &Global) -> FitOptions {
    FitOptions {
        seed: global.seed.unwrap_or(FitOptions::default().seed),
        ..FitOptions::default()
    }
}

pub fn aggregate(args: &AggregateArgs, global: &Global) -> CmdResult {
    let window = DateWindow::new(args.from, args.to)?;
    let mut paths = Vec::new();
    for pattern in &args.input {
        let matches: Vec<PathBuf> = glob::glob(pattern)
            .with_context(|| format!("bad input pattern `{pattern}`"))
            .invalid()?
            .filter_map(|m| m.ok())
            .collect();
        if matches.is_empty() {
            return Err(Failure::Invalid(anyhow!("no files match {pattern}")));
        }
        paths.extend(matches);
    }
    let files = trip_files_in(&paths);
    if files.is_empty() {
        return Err(Failure::Invalid(anyhow!("no trip CSV files under the given inputs")));
    }
    let options = AggregateOptions {
        strict: args.strict,
        max_passenger_count: args.max_passengers,
    };
    let agg = aggregate_trip_files(&files, window, options)?;

    let mut buf = Vec::new();
    write_daily_csv(&agg.series, &mut buf)?;
    let mut outputs = Outputs::default();
    for f in &files {
        outputs.protect(f);
    }
    outputs.add(&args.out, buf);
    finish(outputs)?;

    let s = agg.stats;
    summary(
        global,
        json!({ "files": files.len(), "days": agg.series.len(), "total_passengers": agg.series.total(), "stats": s }),
        format!(
            "{} files, {} days, {} passengers\naccepted {} trips; skipped {} outside window, {} over max count, {} malformed\n",
            files.len(),
            agg.series.len(),
            agg.series.total(),
            s.accepted,
            s.outside_window,
            s.over_max_count,
            s.malformed
        ),
    );
    Ok(())
}

fn correlogram_csv(r: &CorrelogramResult) -> String {
    let mut s = String::from("lag,value,band\n");
    for (l, v) in r.lags.iter().zip(&r.values) {
        s.push_str(&format!("{l},{v},{}\n", r.band));
    }
    s
}

fn correlogram_plot(r: &CorrelogramResult, title: &str) -> Result<String, Failure> {
    let lags: Vec<f64> = r.lags.iter().map(|&l| l as f64).collect();
    let series = [
        Series {
            label: title,
            points: lags.iter().copied().zip(r.values.iter().copied()).collect(),
        },
        Series {
            label: "+95% band",
            points: lags.iter().map(|&l| (l, r.band)).collect(),
        },
        Series {
            label: "-95% band",
            points: lags.iter().map(|&l| (l, -r.band)).collect(),
        },
    ];
    plot(
        PlotKind::Overlay,
        &Figure {
            title,
            x_label: "lag (days)",
            y_label: "correlation (unitless)",
            log_y: false,
        },
        PlotData::Series(&series),
    )
}

pub fn analyze(args: &AnalyzeArgs, global: &Global) -> CmdResult {
    let series = read_daily(&args.input)?;
    let train = if args.holdout == 0 {
        series.clone()
    } else {
        split_train_test(&series, args.holdout)?.train
    };
    let trend = fit_linear_trend(&train)?;
    let resid = detrend(&train, &trend);
    let acf_r = acf(resid.values(), args.max_lag)?;
    let pacf_r = pacf(resid.values(), args.max_lag)?;
    let adf = adf_test(resid.values())?;
    let calendar = calendar_aggregates(&series, args.top);

    let mut out = Outputs::default();
    out.protect(&args.input);
    let dir = &args.out;
    out.json(dir.join("trend.json"), &trend).compute()?;
    out.json(dir.join("adf.json"), &adf).compute()?;
    out.json(dir.join("calendar.json"), &calendar).compute()?;
    out.add(dir.join("acf.csv"), correlogram_csv(&acf_r));
    out.add(dir.join("pacf.csv"), correlogram_csv(&pacf_r));
    out.add(dir.join("residuals.csv"), residual_csv(&resid)?);

    let values = train.values();
    let fitted = trend.values_from(1, train.len());
    let lines = [
        Series::indexed("passengers", 1.0, &values),
        Series::indexed("linear trend", 1.0, &fitted),
    ];
    out.add(
        dir.join("series_trend.svg"),
        plot(
            PlotKind::Overlay,
            &Figure {
                title: "Daily passengers and fitted trend (training range)",
                x_label: DAY_AXIS,
                y_label: PASSENGERS,
                log_y: false,
            },
            PlotData::Series(&lines),
        )?,
    );
    out.add(dir.join("acf.svg"), correlogram_plot(&acf_r, "ACF of detrended residuals")?);
    out.add(dir.join("pacf.svg"), correlogram_plot(&pacf_r, "PACF of detrended residuals")?);
    finish(out)?;

    summary(
        global,
        json!({ "train_days": train.len(), "trend": trend, "adf": adf }),
        format!(
            "trend on {} days: intercept {:.3} (se {:.3}), slope {:.4} (se {:.4}) passengers/day\nADF on detrended residuals: statistic {:.4}, lag {}, p-value {}{:.4}\nwrote {}\n",
            train.len(),
            trend.intercept,
            trend.intercept_se,
            trend.slope,
            trend.slope_se,
            adf.statistic,
            adf.lag_order,
            if adf.p_value_clamped && adf.p_value < 0.5 { "<= " } else if adf.p_value_clamped { ">= " } else { "" },
            adf.p_value,
            dir.display()
        ),
    );
    Ok(())
}

fn spectrum_csv(s: &SpectralDensity) -> String {
    let mut out = String::from("frequency,period,power\n");
    for (f, p) in s.frequencies.iter().zip(&s.power) {
        out.push_str(&format!("{f},{},{p}\n", 1.0 / f));
    }
    out
}

fn spectrum_plot(curves: &[(&str, &SpectralDensity)], title: &str) -> Result<String, Failure> {
    let series: Vec<Series> = curves
        .iter()
        .map(|(label, s)| Series {
            label,
            points: s.frequencies.iter().copied().zip(s.power.iter().copied()).collect(),
        })
        .collect();
    let kind = if series.len() == 1 { PlotKind::Line } else { PlotKind::Overlay };
    plot(
        kind,
        &Figure {
            title,
            x_label: "frequency (cycles per day)",
            y_label: "power (passengers² per cycle/day, log scale)",
            log_y: true,
        },
        PlotData::Series(&series),
    )
}

pub fn spectrum(args: &SpectrumArgs, global: &Global) -> CmdResult {
    let x = read_residuals(&args.input)?;
    let raw = periodogram(x.values())?;
    let smooth = daniell_smooth(&raw, args.span)?;
    let ar = ar_spectrum(x.values(), args.ar_max)?;
    let sep = default_min_separation(x.len());
    let peaks = dominant_periods(&smooth, args.peaks, sep)?;
    let ar_peaks = dominant_periods(&ar, args.peaks, sep)?;

    let mut out = Outputs::default();
    out.protect(&args.input);
    let dir = &args.out;
    out.add(dir.join("spectrum_raw.csv"), spectrum_csv(&raw));
    out.add(dir.join("spectrum_daniell.csv"), spectrum_csv(&smooth));
    out.add(dir.join("spectrum_ar.csv"), spectrum_csv(&ar));
    let doc = json!({
        "n": x.len(),
        "min_separation": sep,
        "daniell": { "estimator": smooth.estimator, "peaks": peaks },
        "ar": { "estimator": ar.estimator, "peaks": ar_peaks },
    });
    out.json(dir.join("peaks.json"), &doc).compute()?;
    out.add(
        dir.join("spectrum.svg"),
        spectrum_plot(
            &[("periodogram", &raw), ("Daniell smoothed", &smooth), ("AR", &ar)],
            "Spectral density of residuals",
        )?,
    );
    finish(out)?;

    let list = |p: &cyclecast_core::spectral::PeakSet| {
        p.peaks
            .iter()
            .map(|k| format!("{} ({:.2} d)", k.period, k.exact_period))
            .collect::<Vec<_>>()
            .join(", ")
    };
    summary(
        global,
        doc,
        format!("Daniell peaks: {}\nAR peaks: {}\n", list(&peaks), list(&ar_peaks)),
    );
    Ok(())
}

#[derive(Serialize)]
struct CycleSummary<'a> {
    period: usize,
    amplitude: f64,
    phase_means: &'a [f64],
}

pub fn cycles(args: &CyclesArgs, global: &Global) -> CmdResult {
    let [json_path, csv_path] = args.out.as_slice() else {
        return Err(Failure::Invalid(anyhow!(
            "--out takes two comma-separated paths: cycles JSON, final residuals CSV"
        )));
    };
    let x = read_residuals(&args.input)?;
    let removal = remove_cycles_traced(&x, &args.periods)?;

    let mut out = Outputs::default();
    out.protect(&args.input);
    let profiles: Vec<CycleSummary> = removal
        .cycles
        .profiles
        .iter()
        .map(|c| CycleSummary {
            period: c.period,
            amplitude: c.amplitude(),
            phase_means: &c.phase_means,
        })
        .collect();
    out.json(json_path, &json!({ "origin_index": x.origin_index(), "cycles": profiles }))
        .compute()?;
    out.add(csv_path, residual_csv(&removal.residuals)?);

    let dir = json_path.parent().unwrap_or(Path::new(""));
    for c in &removal.cycles.profiles {
        let title = format!("{}-day cycle: mean residual by phase", c.period);
        let s = [Series::indexed("phase mean", 0.0, &c.phase_means)];
        out.add(
            dir.join(format!("cycle_{}.svg", c.period)),
            plot(
                PlotKind::Profile,
                &Figure {
                    title: &title,
                    x_label: "phase ((t - 1) mod period, days)",
                    y_label: PASSENGERS,
                    log_y: false,
                },
                PlotData::Series(&s),
            )?,
        );
    }
    let after = daniell_smooth(&periodogram(removal.residuals.values())?, args.span)?;
    out.add(
        dir.join("final_spectrum.svg"),
        spectrum_plot(&[("Daniell smoothed", &after)], "Spectrum after cycle removal")?,
    );
    finish(out)?;

    let human: String = removal
        .cycles
        .profiles
        .iter()
        .map(|c| format!("removed {}-day cycle, amplitude {:.2}\n", c.period, c.amplitude()))
        .collect();
    summary(
        global,
        json!({ "periods": removal.cycles.periods(), "amplitudes": profiles.iter().map(|p| p.amplitude).collect::<Vec<_>>() }),
        human,
    );
    Ok(())
}

fn parse_grid(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Invalid(anyhow!("expected grid bounds like 10x10, got `{s}`"));
    let (p, q) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?))
}

fn grid_heatmaps(g: &GridResult, stem: &Path, out: &mut Outputs) -> Result<(), Failure> {
    let rows: Vec<String> = (1..=g.p_max).map(|p| format!("p={p}")).collect();
    let cols: Vec<String> = (1..=g.q_max).map(|q| format!("q={q}")).collect();
    let maps: [(&str, &str, fn(&cyclecast_core::arma::Criteria) -> f64); 2] = [
        ("aic", "AIC per observation by (p, q)", |c| c.aic_n),
        ("hmean", "Harmonic mean of AIC/n and BIC/n by (p, q)", |c| c.hmean_n),
    ];
    let name = stem.file_stem().and_then(|s| s.to_str()).unwrap_or("grid");
    for (suffix, title, pick) in maps {
        let m = g.matrix(pick);
        let svg = plot(
            PlotKind::Heatmap,
            &Figure {
                title,
                x_label: "MA order q",
                y_label: "AR order p",
                log_y: false,
            },
            PlotData::Matrix {
                values: &m,
                row_labels: rows.clone(),
                col_labels: cols.clone(),
            },
        )?;
        out.add(stem.with_file_name(format!("{name}_{suffix}.svg")), svg);
    }
    Ok(())
}

fn grid_document(g: &GridResult) -> serde_json::Value {
    json!({
        "grid": g,
        "aic_n": g.matrix(|c| c.aic_n),
        "bic_n": g.matrix(|c| c.bic_n),
        "hmean_n": g.matrix(|c| c.hmean_n),
    })
}

pub fn fit(args: &FitArgs, global: &Global) -> CmdResult {
    let x = read_residuals(&args.input)?;
    let opts = fit_options(global);
    let mut out = Outputs::default();
    out.protect(&args.input);

    if let Some(grid) = &args.grid {
        let (p_max, q_max) = parse_grid(grid)?;
        let g = grid_search(x.values(), p_max, q_max, &opts)?;
        let doc = grid_document(&g);
        out.json(&args.out, &doc).compute()?;
        grid_heatmaps(&g, &args.out, &mut out)?;
        finish(out)?;
        summary(
            global,
            json!({
                "best_by_aic": g.best_by_aic,
                "min_aic_n": g.min_aic_n(),
                "best_by_hmean": g.best_by_hmean,
                "min_hmean_n": g.min_hmean_n(),
                "failures": g.failures.len(),
            }),
            format!(
                "{}x{} grid: best AIC/n {:.4} at {}, best harmonic mean {:.4} at {}, {} failed fits\n",
                p_max,
                q_max,
                g.min_aic_n(),
                g.best_by_aic,
                g.min_hmean_n(),
                g.best_by_hmean,
                g.failures.len()
            ),
        );
        return Ok(());
    }

    let order = args.order.as_deref().expect("clap requires --grid or --order");
    let spec: ArmaSpec = order.parse()?;
    let model = fit_arma(x.values(), spec, &opts)?;
    let criteria = information_criteria(&model).ok();
    if criteria.is_none() {
        eprintln!("warning: {spec} did not converge; criteria omitted");
    }
    let se = parameter_standard_errors(&model, x.values())
        .map_err(|e| eprintln!("warning: standard errors unavailable: {e}"))
        .ok();
    let modulus = |r: Vec<cyclecast_core::arma::Complex64>| r.iter().map(|z| z.norm()).collect::<Vec<_>>();
    let doc = json!({
        "model": model,
        "criteria": criteria,
        "standard_errors": se,
        "ar_root_moduli": modulus(model.ar_roots()),
        "ma_root_moduli": modulus(model.ma_roots()),
    });
    out.json(&args.out, &doc).compute()?;
    finish(out)?;
    summary(
        global,
        doc,
        format!(
            "{spec}: phi {:?}, theta {:?}, sigma2 {:.4}, loglik {:.4}{}\n",
            model.phi,
            model.theta,
            model.sigma2,
            model.loglik,
            criteria.map_or(String::new(), |c| format!(", AIC/n {:.4}, BIC/n {:.4}", c.aic_n, c.bic_n))
        ),
    );
    Ok(())
}

fn load_config(args: &RunArgs, global: &Global) -> Result<PipelineConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))
                .invalid()?;
            toml::from_str::<PipelineConfig>(&text)
                .with_context(|| format!("invalid config {}", path.display()))
                .invalid()?
        }
        None => PipelineConfig::default(),
    };
    if let Some(h) = args.holdout {
        config.holdout_days = h;
    }
    if let Some(p) = &args.periods {
        config.cycle_periods = p.clone();
    }
    if let Some(g) = &args.grid {
        (config.p_max, config.q_max) = parse_grid(g)?;
        config.run_grid = true;
    }
    if args.no_grid {
        config.run_grid = false;
    }
    if !args.candidates.is_empty() {
        config.candidate_specs = args
            .candidates
            .iter()
            .map(|s| s.parse::<ArmaSpec>())
            .collect::<Result<_, _>>()?;
        if args.level_adjust.is_none() {
            config.level_adjust = vec![true; config.candidate_specs.len()];
        }
    }
    if let Some(l) = &args.level_adjust {
        config.level_adjust = l.clone();
    }
    if let Some(f) = &args.forecast {
        config.forecast_mode = if f == "rolling" {
            ForecastMode::Rolling
        } else {
            ForecastMode::MultiStep
        };
    }
    if args.append_grid_specs {
        config.append_grid_specs = true;
    }
    if let Some(s) = global.seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).compute()?;
    for r in rows {
        w.write_record(&r).compute()?;
    }
    w.into_inner().map_err(|e| Failure::Compute(anyhow!("{e}")))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.2}"))
}

pub fn run(args: &RunArgs, global: &Global) -> CmdResult {
    let config = load_config(args, global)?;
    let series = read_daily(&args.input)?;
    let report = run_pipeline(&config, &series)?;
    let split = split_train_test(&series, config.holdout_days)?;
    let dec = decompose(&split.train, &config.cycle_periods)?;

    let mut out = Outputs::default();
    out.protect(&args.input);
    if let Some(c) = &args.config {
        out.protect(c);
    }
    let dir = &args.out;
    out.json(dir.join("report.json"), &report).compute()?;

    let table2 = report
        .candidates
        .iter()
        .map(|c| {
            vec![
                c.spec.to_string(),
                c.adjustment.map_or(String::new(), |a| format!("{:.2}", a.constant)),
                opt(c.train_rmse),
                opt(c.test_rmse),
                c.criteria.map_or(String::new(), |k| format!("{:.4}", k.aic_n)),
                c.criteria.map_or(String::new(), |k| format!("{:.4}", k.hmean_n)),
            ]
        })
        .collect();
    out.add(
        dir.join("table2.csv"),
        csv_bytes(&["model", "level_constant", "train_rmse", "test_rmse", "aic_n", "hmean_n"], table2)?,
    );
    let table3 = report
        .baselines
        .iter()
        .map(|b| vec![b.name.clone(), opt(b.test_rmse)])
        .collect();
    out.add(dir.join("table3.csv"), csv_bytes(&["model", "test_rmse"], table3)?);

    let train_actual = split.train.values();
    let test_actual = split.test.values();
    let t_test = (split.train.len() + 1) as f64;
    for c in report.candidates.iter().filter(|c| c.model.is_some()) {
        let tag = format!("{}_{}", c.spec.p, c.spec.q);
        let name = c.spec.to_string();
        let figs = [
            (
                format!("train_fit_{tag}.svg"),
                format!("{name}: training fit"),
                PASSENGERS,
                vec![
                    Series::indexed("actual", 1.0, &train_actual),
                    Series::indexed("predicted", 1.0, &c.train_predictions),
                ],
            ),
            (
                format!("residual_fit_{tag}.svg"),
                format!("{name}: final residuals, one-step predictions"),
                "residual passengers per day",
                vec![
                    Series::indexed("residual", 1.0, dec.residuals.values()),
                    Series::indexed("predicted", 1.0, &c.residual_predictions),
                ],
            ),
            (
                format!("test_forecast_{tag}.svg"),
                format!("{name}: held-out forecast"),
                PASSENGERS,
                vec![
                    Series::indexed("actual", t_test, &test_actual),
                    Series::indexed("forecast", t_test, &c.test_predictions),
                ],
            ),
        ];
        for (file, title, y_label, series) in figs {
            let svg = plot(
                PlotKind::Overlay,
                &Figure {
                    title: &title,
                    x_label: DAY_AXIS,
                    y_label,
                    log_y: false,
                },
                PlotData::Series(&series),
            )?;
            out.add(dir.join(file), svg);
        }
    }
    if let Some(g) = &report.grid {
        grid_heatmaps(g, &dir.join("grid.json"), &mut out)?;
    }
    finish(out)?;

    for f in &report.failures {
        eprintln!("warning: {}: {}", f.stage, f.message);
    }
    let mut human = format!(
        "train {} days from {}, test {} days from {}\n",
        report.n_train, report.train_start, report.n_test, report.test_start
    );
    for c in &report.candidates {
        human.push_str(&format!(
            "{:<12} train RMSE {:>12}  test RMSE {:>12}{}\n",
            c.spec.to_string(),
            opt(c.train_rmse),
            opt(c.test_rmse),
            c.failure.as_ref().map_or(String::new(), |f| format!("  (failed: {f})"))
        ));
    }
    for b in &report.baselines {
        human.push_str(&format!("{:<24} test RMSE {:>12}\n", b.name, opt(b.test_rmse)));
    }
    summary(
        global,
        json!({
            "candidates": report.candidates.iter().map(|c| json!({
                "spec": c.spec, "train_rmse": c.train_rmse, "test_rmse": c.test_rmse,
                "adjustment": c.adjustment, "failure": c.failure,
            })).collect::<Vec<_>>(),
            "baselines": report.baselines,
            "failures": report.failures,
        }),
        human,
    );
    Ok(())
}
