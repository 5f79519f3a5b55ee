//! Phase-mean cycles.
//!
//! A cycle of period `P` assigns each absolute time index `t` the phase
//! `(t - 1) mod P` and stores the mean residual per phase. Removing a cycle
//! subtracts that mean from every observation in the phase. Because phases
//! are keyed by the absolute index, a profile estimated on the training
//! range extends to any later `t` without re-anchoring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::ResidualSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleProfile {
    pub period: usize,
    /// Indexed by phase `(t - 1) mod period`.
    pub phase_means: Vec<f64>,
}

impl CycleProfile {
    pub fn phase(&self, t: usize) -> usize {
        phase_of(t, self.period)
    }

    pub fn value_at(&self, t: usize) -> f64 {
        self.phase_means[self.phase(t)]
    }

    /// Largest absolute phase mean.
    pub fn amplitude(&self) -> f64 {
        self.phase_means.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn phase_of(t: usize, period: usize) -> usize {
    debug_assert!(t >= 1);
    (t - 1) % period
}

/// Cycles in the order they were removed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CycleSet {
    pub profiles: Vec<CycleProfile>,
}

impl CycleSet {
    pub fn periods(&self) -> Vec<usize> {
        self.profiles.iter().map(|c| c.period).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn get(&self, period: usize) -> Option<&CycleProfile> {
        self.profiles.iter().find(|c| c.period == period)
    }

    pub fn value_at(&self, t: usize) -> f64 {
        cycle_value_at(self, t)
    }

    pub fn values_from(&self, start: usize, len: usize) -> Vec<f64> {
        (start..start + len).map(|t| self.value_at(t)).collect()
    }
}

pub fn extract_cycle(x: &ResidualSeries, period: usize) -> Result<CycleProfile> {
    if period < 2 {
        return Err(Error::InvalidInput(format!(
            "cycle period must be at least 2, got {period}"
        )));
    }
    if period > x.len() {
        return Err(Error::InsufficientData {
            needed: period,
            got: x.len(),
        });
    }
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (i, v) in x.values().iter().enumerate() {
        let p = phase_of(x.time_at(i), period);
        sums[p] += v;
        counts[p] += 1;
    }
    let phase_means = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    Ok(CycleProfile {
        period,
        phase_means,
    })
}

pub fn remove_cycle(x: &ResidualSeries, c: &CycleProfile) -> ResidualSeries {
    let values = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v - c.value_at(x.time_at(i)))
        .collect();
    x.with_values(values)
}

/// Intermediate residuals after each removal step, for diagnostics.
#[derive(Debug, Clone)]
pub struct SequentialRemoval {
    pub residuals: ResidualSeries,
    pub cycles: CycleSet,
    pub steps: Vec<ResidualSeries>,
}

/// Removes the given cycles shortest first, estimating each profile from
/// the residuals left by the previous removals.
pub fn remove_cycles_sequential(
    x: &ResidualSeries,
    periods: &[usize],
) -> Result<(ResidualSeries, CycleSet)> {
    let out = remove_cycles_traced(x, periods)?;
    Ok((out.residuals, out.cycles))
}

pub fn remove_cycles_traced(x: &ResidualSeries, periods: &[usize]) -> Result<SequentialRemoval> {
    if periods.is_empty() {
        return Err(Error::InvalidInput("no cycle periods given".into()));
    }
    let mut sorted = periods.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput(format!(
            "cycle period {} listed more than once",
            w[0]
        )));
    }
    let mut current = x.clone();
    let mut profiles = Vec::with_capacity(sorted.len());
    let mut steps = Vec::with_capacity(sorted.len());
    for period in sorted {
        let profile = extract_cycle(&current, period)?;
        current = remove_cycle(&current, &profile);
        steps.push(current.clone());
        profiles.push(profile);
    }
    Ok(SequentialRemoval {
        residuals: current,
        cycles: CycleSet { profiles },
        steps,
    })
}

/// Sum of every profile's phase mean at `t`; zero for an empty set.
pub fn cycle_value_at(cs: &CycleSet, t: usize) -> f64 {
    cs.profiles.iter().map(|c| c.value_at(t)).sum()
}
