//! Daily passenger-count series: aggregation from raw trip records,
//! the canonical `date,passengers` CSV format, train/test splitting and
//! calendar summaries.
//!
//! A trip is assigned to the calendar date of its pickup timestamp.
//! Records whose pickup date falls outside the configured window are
//! dropped and tallied, never treated as errors; real monthly trip files
//! routinely contain a handful of stray dates from neighbouring months.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PICKUP_COLUMN: &str = "tpep_pickup_datetime";
const PASSENGER_COLUMN: &str = "passenger_count";

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M:%S%.f",
    "%m/%d/%Y %I:%M:%S %p",
    "%m/%d/%Y %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

/// One trip as reported by the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripRecord {
    pub pickup: NaiveDateTime,
    pub passenger_count: u32,
}

impl TripRecord {
    pub fn new(pickup: NaiveDateTime, passenger_count: u32) -> Self {
        Self {
            pickup,
            passenger_count,
        }
    }
}

/// Inclusive calendar window `[from, to]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    from: NaiveDate,
    to: NaiveDate,
}

impl DateWindow {
    pub fn new(from: NaiveDate, to: NaiveDate) -> Result<Self> {
        if to < from {
            return Err(Error::InvalidInput(format!(
                "date window ends ({to}) before it starts ({from})"
            )));
        }
        Ok(Self { from, to })
    }

    pub fn from(&self) -> NaiveDate {
        self.from
    }

    pub fn to(&self) -> NaiveDate {
        self.to
    }

    pub fn days(&self) -> usize {
        (self.to - self.from).num_days() as usize + 1
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.from <= date && date <= self.to
    }

    fn offset(&self, date: NaiveDate) -> Option<usize> {
        self.contains(date)
            .then(|| (date - self.from).num_days() as usize)
    }
}

/// Controls how raw trip rows are filtered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AggregateOptions {
    /// Abort on the first unparseable row instead of skipping it.
    pub strict: bool,
    /// Drop trips reporting more passengers than this.
    pub max_passenger_count: Option<u32>,
}

/// Row accounting for an aggregation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub accepted: u64,
    pub outside_window: u64,
    pub over_max_count: u64,
    pub malformed: u64,
}

impl IngestStats {
    pub fn skipped(&self) -> u64 {
        self.outside_window + self.over_max_count + self.malformed
    }

    fn merge(&mut self, other: &IngestStats) {
        self.accepted += other.accepted;
        self.outside_window += other.outside_window;
        self.over_max_count += other.over_max_count;
        self.malformed += other.malformed;
    }
}

/// Running per-day passenger totals over a fixed window.
///
/// Tallies merge by element-wise addition, so partial tallies built from
/// separate files can be combined in any order.
#[derive(Debug, Clone)]
pub struct DailyTally {
    window: DateWindow,
    options: AggregateOptions,
    totals: Vec<u64>,
    stats: IngestStats,
}

impl DailyTally {
    pub fn new(window: DateWindow, options: AggregateOptions) -> Self {
        Self {
            window,
            options,
            totals: vec![0; window.days()],
            stats: IngestStats::default(),
        }
    }

    pub fn add(&mut self, record: &TripRecord) {
        if let Some(max) = self.options.max_passenger_count {
            if record.passenger_count > max {
                self.stats.over_max_count += 1;
                return;
            }
        }
        match self.window.offset(record.pickup.date()) {
            Some(i) => {
                self.totals[i] += u64::from(record.passenger_count);
                self.stats.accepted += 1;
            }
            None => self.stats.outside_window += 1,
        }
    }

    pub fn record_malformed(&mut self) {
        self.stats.malformed += 1;
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    pub fn merge(mut self, other: DailyTally) -> Result<DailyTally> {
        if self.window != other.window {
            return Err(Error::InvalidInput(
                "cannot merge tallies over different windows".into(),
            ));
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.stats.merge(&other.stats);
        Ok(self)
    }

    /// Consumes `reader` as a TLC trip CSV. Only the pickup timestamp and
    /// passenger count columns are read; all other columns are ignored.
    pub fn read_trip_csv<R: Read>(&mut self, reader: R) -> Result<()> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::InvalidInput(format!("trip file lacks a `{name}` column")))
        };
        let pickup_col = column(PICKUP_COLUMN)?;
        let count_col = column(PASSENGER_COLUMN)?;

        for (i, row) in rdr.records().enumerate() {
            // header is line 1
            let line = i + 2;
            let parsed = row
                .map_err(|e| e.to_string())
                .and_then(|r| parse_trip_row(&r, pickup_col, count_col));
            match parsed {
                Ok(record) => self.add(&record),
                Err(reason) if self.options.strict => {
                    return Err(Error::MalformedRow { row: line, reason })
                }
                Err(_) => self.record_malformed(),
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<Aggregation> {
        if self.stats.accepted == 0 {
            return Err(Error::Empty(format!(
                "no trip records fall inside {}..={}",
                self.window.from, self.window.to
            )));
        }
        Ok(Aggregation {
            series: DailySeries::new(self.window.from, self.totals)?,
            stats: self.stats,
        })
    }
}

fn parse_trip_row(
    row: &csv::StringRecord,
    pickup_col: usize,
    count_col: usize,
) -> std::result::Result<TripRecord, String> {
    let stamp = row
        .get(pickup_col)
        .ok_or_else(|| "missing pickup timestamp".to_string())?;
    let count = row
        .get(count_col)
        .ok_or_else(|| "missing passenger count".to_string())?;
    Ok(TripRecord::new(
        parse_timestamp(stamp)?,
        parse_passenger_count(count)?,
    ))
}

pub(crate) fn parse_timestamp(raw: &str) -> std::result::Result<NaiveDateTime, String> {
    let raw = raw.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .ok_or_else(|| format!("unrecognised timestamp `{raw}`"))
}

/// Accepts integral values written either as `3` or `3.0`.
pub(crate) fn parse_passenger_count(raw: &str) -> std::result::Result<u32, String> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<u32>() {
        return Ok(v);
    }
    match raw.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) => Ok(v as u32),
        _ => Err(format!("invalid passenger count `{raw}`")),
    }
}

/// Result of turning trip records into a daily series.
#[derive(Debug, Clone)]
pub struct Aggregation {
    pub series: DailySeries,
    pub stats: IngestStats,
}

/// Sums passenger counts per pickup date over `window`.
pub fn aggregate_trips<I>(records: I, window: DateWindow) -> Result<Aggregation>
where
    I: IntoIterator<Item = TripRecord>,
{
    let mut tally = DailyTally::new(window, AggregateOptions::default());
    for record in records {
        tally.add(&record);
    }
    tally.finish()
}

/// Aggregates a set of trip CSV files, one file per worker.
pub fn aggregate_trip_files<P: AsRef<Path> + Sync>(
    paths: &[P],
    window: DateWindow,
    options: AggregateOptions,
) -> Result<Aggregation> {
    if paths.is_empty() {
        return Err(Error::InvalidInput("no trip files given".into()));
    }
    let tallies = paths
        .par_iter()
        .map(|path| {
            let path = path.as_ref();
            let file = std::fs::File::open(path).map_err(|e| {
                Error::InvalidInput(format!("cannot open {}: {e}", path.display()))
            })?;
            let mut tally = DailyTally::new(window, options);
            tally.read_trip_csv(std::io::BufReader::new(file))?;
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut iter = tallies.into_iter();
    let first = iter.next().expect("at least one path");
    iter.try_fold(first, DailyTally::merge)?.finish()
}

/// Consecutive daily passenger totals. Entry `i` belongs to
/// `start_date + i` and carries time index `t = i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailySeries {
    start_date: NaiveDate,
    counts: Vec<u64>,
}

impl DailySeries {
    pub fn new(start_date: NaiveDate, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty("daily series has no observations".into()));
        }
        Ok(Self { start_date, counts })
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.counts.len() - 1)
    }

    pub fn date_at(&self, i: usize) -> NaiveDate {
        self.start_date + Duration::days(i as i64)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.date_at(i), c))
    }

    /// Appends `next`, which must start the day after this series ends.
    pub fn concat(&self, next: &DailySeries) -> Result<DailySeries> {
        let expected = self.end_date() + Duration::days(1);
        if next.start_date != expected {
            return Err(Error::InvalidInput(format!(
                "series starting {} does not follow series ending {}",
                next.start_date,
                self.end_date()
            )));
        }
        let mut counts = self.counts.clone();
        counts.extend_from_slice(&next.counts);
        DailySeries::new(self.start_date, counts)
    }
}

/// Training prefix and the held-out suffix that immediately follows it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitSeries {
    pub train: DailySeries,
    pub test: DailySeries,
}

impl SplitSeries {
    pub fn rejoin(&self) -> DailySeries {
        self.train
            .concat(&self.test)
            .expect("split halves are contiguous")
    }
}

pub fn split_train_test(series: &DailySeries, holdout_days: usize) -> Result<SplitSeries> {
    if holdout_days == 0 {
        return Err(Error::InvalidInput("holdout must be at least one day".into()));
    }
    let n = series.len();
    if holdout_days >= n {
        return Err(Error::InvalidInput(format!(
            "holdout of {holdout_days} days leaves no training data in a {n}-day series"
        )));
    }
    let cut = n - holdout_days;
    Ok(SplitSeries {
        train: DailySeries::new(series.start_date, series.counts[..cut].to_vec())?,
        test: DailySeries::new(series.date_at(cut), series.counts[cut..].to_vec())?,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct DailyRow {
    date: NaiveDate,
    passengers: u64,
}

/// Reads the canonical `date,passengers` CSV. Dates must be ascending with
/// no gaps or repeats.
pub fn read_daily_csv<R: Read>(reader: R) -> Result<DailySeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut start: Option<NaiveDate> = None;
    let mut prev: Option<NaiveDate> = None;
    let mut counts = Vec::new();

    for (i, row) in rdr.deserialize::<DailyRow>().enumerate() {
        let row = row.map_err(|e| Error::MalformedRow {
            row: i + 2,
            reason: e.to_string(),
        })?;
        if let Some(p) = prev {
            if row.date == p {
                return Err(Error::DuplicateDate(row.date));
            }
            if row.date < p {
                return Err(Error::UnsortedDates {
                    earlier: row.date,
                    later: p,
                });
            }
            let expected = p + Duration::days(1);
            if row.date != expected {
                return Err(Error::MissingDate(expected));
            }
        } else {
            start = Some(row.date);
        }
        prev = Some(row.date);
        counts.push(row.passengers);
    }

    match start {
        Some(start) => DailySeries::new(start, counts),
        None => Err(Error::Empty("daily CSV has no data rows".into())),
    }
}

pub fn write_daily_csv<W: Write>(series: &DailySeries, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (date, passengers) in series.iter() {
        wtr.serialize(DailyRow { date, passengers })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_daily_csv_file(path: impl AsRef<Path>) -> Result<DailySeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    read_daily_csv(std::io::BufReader::new(file))
}

/// One dated count in a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DatedCount {
    pub date: NaiveDate,
    pub passengers: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CalendarReport {
    pub grand_total: u64,
    pub yearly: BTreeMap<i32, u64>,
    /// Totals by month of year (1 = January), pooled across years.
    pub monthly: BTreeMap<u32, u64>,
    /// Monday first.
    pub weekday: Vec<(String, u64)>,
    /// Highest counts first.
    pub top: Vec<DatedCount>,
    /// Lowest counts first.
    pub bottom: Vec<DatedCount>,
}

impl CalendarReport {
    pub fn weekday_total(&self, day: Weekday) -> u64 {
        self.weekday[day.num_days_from_monday() as usize].1
    }
}

pub fn calendar_aggregates(series: &DailySeries, k: usize) -> CalendarReport {
    let mut yearly = BTreeMap::new();
    let mut monthly = BTreeMap::new();
    let mut weekday = [0u64; 7];
    for (date, c) in series.iter() {
        *yearly.entry(date.year()).or_insert(0) += c;
        *monthly.entry(date.month()).or_insert(0) += c;
        weekday[date.weekday().num_days_from_monday() as usize] += c;
    }

    let mut ranked: Vec<DatedCount> = series
        .iter()
        .map(|(date, passengers)| DatedCount { date, passengers })
        .collect();
    ranked.sort_by(|a, b| b.passengers.cmp(&a.passengers).then(a.date.cmp(&b.date)));
    let top = ranked.iter().take(k).copied().collect();
    ranked.sort_by(|a, b| a.passengers.cmp(&b.passengers).then(a.date.cmp(&b.date)));
    let bottom = ranked.iter().take(k).copied().collect();

    let names = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];
    CalendarReport {
        grand_total: series.total(),
        yearly,
        monthly,
        weekday: names
            .iter()
            .zip(weekday)
            .map(|(d, total)| (d.to_string(), total))
            .collect(),
        top,
        bottom,
    }
}

/// Expands a list of paths, reading directories one level deep.
pub fn trip_files_in(paths: &[PathBuf]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            if let Ok(entries) = std::fs::read_dir(p) {
                let mut files: Vec<_> = entries
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                    .collect();
                files.sort();
                out.extend(files);
            }
        } else {
            out.push(p.clone());
        }
    }
    out
}
