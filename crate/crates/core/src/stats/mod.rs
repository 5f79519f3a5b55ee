//! Trend fitting, correlograms and the unit-root test.

mod adf;
mod correlogram;
mod trend;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adf::{adf_p_value, adf_test, AdfResult};
pub use correlogram::{
    acf, autocovariance, durbin_levinson, pacf, CorrelogramResult, DurbinLevinson,
};
pub use trend::{detrend, fit_linear_trend, TrendModel};

/// Real-valued series anchored to an absolute time index, so that phase
/// arithmetic survives slicing. `origin_index` is the `t` of the first
/// entry; the first day of the training data has `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries {
    values: Vec<f64>,
    origin_index: usize,
}

impl ResidualSeries {
    pub fn new(values: Vec<f64>, origin_index: usize) -> Result<Self> {
        if origin_index == 0 {
            return Err(Error::InvalidInput("time index starts at 1".into()));
        }
        Ok(Self {
            values,
            origin_index,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn origin_index(&self) -> usize {
        self.origin_index
    }

    /// Absolute time index of entry `i`.
    pub fn time_at(&self, i: usize) -> usize {
        self.origin_index + i
    }

    /// Index one past the last entry, i.e. where a continuation starts.
    pub fn next_index(&self) -> usize {
        self.origin_index + self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            origin_index: self.origin_index,
        }
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    pub fn variance(&self) -> f64 {
        variance(&self.values)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ResidualRow {
    t: usize,
    value: f64,
}

/// Reads a `t,value` CSV with consecutive time indices.
pub fn read_residual_csv<R: Read>(reader: R) -> Result<ResidualSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut origin = None;
    let mut values = Vec::new();
    for (i, row) in rdr.deserialize::<ResidualRow>().enumerate() {
        let row = row.map_err(|e| Error::MalformedRow {
            row: i + 2,
            reason: e.to_string(),
        })?;
        let start = *origin.get_or_insert(row.t);
        if row.t != start + values.len() {
            return Err(Error::MalformedRow {
                row: i + 2,
                reason: format!("expected t = {}, found {}", start + values.len(), row.t),
            });
        }
        values.push(row.value);
    }
    match origin {
        Some(o) => ResidualSeries::new(values, o),
        None => Err(Error::Empty("residual CSV has no data rows".into())),
    }
}

pub fn write_residual_csv<W: Write>(series: &ResidualSeries, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (i, &value) in series.values.iter().enumerate() {
        wtr.serialize(ResidualRow {
            t: series.time_at(i),
            value,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with divisor `n`.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}
