//! `cyclecast`: batch front end for decomposition, spectral analysis, ARMA
//! fitting and the end-to-end forecast evaluation.
//!
//! Exit status is 0 on success, 1 for invalid input or arguments and 2 when
//! a computation fails. Diagnostics go to standard error; summaries go to
//! standard output, as JSON with `--json`.

mod commands;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{ArgGroup, Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cyclecast", version, about = "Cycle removal and ARMA forecasting for daily counts")]
struct Cli {
    /// Seed for every stochastic component (optimizer restarts).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the summary as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum trip CSV passenger counts per pickup day. Writes the daily CSV.
    Aggregate(AggregateArgs),
    /// Trend, ACF/PACF and ADF on the training range. Writes trend.json,
    /// acf.csv, pacf.csv, adf.json, residuals.csv, calendar.json and plots.
    Analyze(AnalyzeArgs),
    /// Periodogram, Daniell and AR spectra with peaks. Writes
    /// spectrum_{raw,daniell,ar}.csv, peaks.json and spectrum.svg.
    Spectrum(SpectrumArgs),
    /// Sequential phase-mean cycle removal. Writes the cycles JSON, the
    /// final residuals CSV, cycle_<P>.svg profiles and final_spectrum.svg.
    Cycles(CyclesArgs),
    /// Fit one ARMA order or a grid of orders. Writes the JSON result and,
    /// for a grid, <stem>_aic.svg and <stem>_hmean.svg heatmaps.
    Fit(FitArgs),
    /// The full experiment. Writes report.json, table2.csv, table3.csv and
    /// per-candidate plots.
    Run(RunArgs),
}

#[derive(Args)]
pub struct AggregateArgs {
    /// Trip CSV files, directories or glob patterns.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<String>,
    #[arg(long)]
    pub from: NaiveDate,
    #[arg(long)]
    pub to: NaiveDate,
    #[arg(long)]
    pub out: PathBuf,
    /// Fail on the first malformed row instead of counting it.
    #[arg(long)]
    pub strict: bool,
    /// Drop trips reporting more passengers than this.
    #[arg(long)]
    pub max_passengers: Option<u32>,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Trailing days excluded from fitting; 0 uses the whole series.
    #[arg(long, default_value_t = 61)]
    pub holdout: usize,
    #[arg(long, default_value_t = 40)]
    pub max_lag: usize,
    /// Busiest and quietest days listed in calendar.json.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub span: usize,
    #[arg(long, default_value_t = 30)]
    pub ar_max: usize,
    #[arg(long, default_value_t = 6)]
    pub peaks: usize,
}

#[derive(Args)]
pub struct CyclesArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "7,30,45,182,365")]
    pub periods: Vec<usize>,
    /// Cycles JSON and final residuals CSV, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
    pub out: Vec<PathBuf>,
    /// Daniell span for the post-removal spectrum.
    #[arg(long, default_value_t = 3)]
    pub span: usize,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["grid", "order"])))]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Grid bounds as PxQ, e.g. 10x10.
    #[arg(long)]
    pub grid: Option<String>,
    /// A single order as p,q.
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// TOML file with pipeline settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub holdout: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub periods: Option<Vec<usize>>,
    /// Grid bounds as PxQ.
    #[arg(long, conflicts_with = "no_grid")]
    pub grid: Option<String>,
    #[arg(long)]
    pub no_grid: bool,
    /// Candidate order p,q; repeat for several. Replaces the configured list.
    #[arg(long = "candidate")]
    pub candidates: Vec<String>,
    /// Level shift per candidate, comma separated booleans.
    #[arg(long, value_delimiter = ',')]
    pub level_adjust: Option<Vec<bool>>,
    #[arg(long, value_parser = ["rolling", "multi-step"])]
    pub forecast: Option<String>,
    #[arg(long)]
    pub append_grid_specs: bool,
}

/// Command failure, split by exit status.
pub enum Failure {
    Invalid(anyhow::Error),
    Compute(anyhow::Error),
}

impl From<cyclecast_core::Error> for Failure {
    fn from(e: cyclecast_core::Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.into())
        } else {
            Failure::Compute(e.into())
        }
    }
}

pub trait Classify<T> {
    fn invalid(self) -> Result<T, Failure>;
    fn compute(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Invalid(e.into()))
    }

    fn compute(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Compute(e.into()))
    }
}

pub struct Global {
    pub seed: Option<u64>,
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let global = Global {
        seed: cli.seed,
        json: cli.json,
    };
    let result = match &cli.command {
        Command::Aggregate(a) => commands::aggregate(a, &global),
        Command::Analyze(a) => commands::analyze(a, &global),
        Command::Spectrum(a) => commands::spectrum(a, &global),
        Command::Cycles(a) => commands::cycles(a, &global),
        Command::Fit(a) => commands::fit(a, &global),
        Command::Run(a) => commands::run(a, &global),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
