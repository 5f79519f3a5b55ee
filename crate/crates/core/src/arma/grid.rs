//! Order selection over a `[1, p_max] × [1, q_max]` grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_arma, information_criteria, ArmaSpec, Criteria, FitOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub spec: ArmaSpec,
    /// `None` when the fit failed or did not converge.
    pub criteria: Option<Criteria>,
    pub loglik: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub p: usize,
    pub q: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub p_max: usize,
    pub q_max: usize,
    /// Row-major by `p`, then `q`.
    pub cells: Vec<GridCell>,
    pub best_by_aic: ArmaSpec,
    pub best_by_hmean: ArmaSpec,
    pub failures: Vec<GridFailure>,
}

impl GridResult {
    pub fn cell(&self, p: usize, q: usize) -> Option<&GridCell> {
        if p == 0 || q == 0 || p > self.p_max || q > self.q_max {
            return None;
        }
        self.cells.get((p - 1) * self.q_max + (q - 1))
    }

    /// `p_max × q_max` matrix of one criterion, NaN where unavailable.
    pub fn matrix(&self, pick: impl Fn(&Criteria) -> f64) -> Vec<Vec<f64>> {
        self.cells
            .chunks(self.q_max)
            .map(|row| {
                row.iter()
                    .map(|c| c.criteria.as_ref().map_or(f64::NAN, &pick))
                    .collect()
            })
            .collect()
    }

    pub fn min_aic_n(&self) -> f64 {
        self.scored().map(|(_, c)| c.aic_n).fold(f64::INFINITY, f64::min)
    }

    pub fn min_hmean_n(&self) -> f64 {
        self.scored().map(|(_, c)| c.hmean_n).fold(f64::INFINITY, f64::min)
    }

    fn scored(&self) -> impl Iterator<Item = (ArmaSpec, &Criteria)> {
        self.cells
            .iter()
            .filter_map(|c| c.criteria.as_ref().map(|k| (c.spec, k)))
    }
}

/// Fits every cell, in parallel. Each cell derives its own optimiser seed
/// from `opts.seed`, so the result does not depend on scheduling.
pub fn grid_search(x: &[f64], p_max: usize, q_max: usize, opts: &FitOptions) -> Result<GridResult> {
    if p_max == 0 || q_max == 0 {
        return Err(Error::InvalidInput("grid bounds must be at least 1".into()));
    }
    let specs: Vec<ArmaSpec> = (1..=p_max)
        .flat_map(|p| (1..=q_max).map(move |q| ArmaSpec::new(p, q)))
        .collect();
    let outcomes: Vec<std::result::Result<GridCell, GridFailure>> = specs
        .par_iter()
        .map(|&spec| {
            let failure = |reason: String| GridFailure {
                p: spec.p,
                q: spec.q,
                reason,
            };
            let m = fit_arma(x, spec, opts).map_err(|e| failure(e.to_string()))?;
            if !m.converged {
                return Err(failure(format!(
                    "optimizer did not converge after {} attempts",
                    m.attempts
                )));
            }
            let c = information_criteria(&m).map_err(|e| failure(e.to_string()))?;
            Ok(GridCell {
                spec,
                criteria: Some(c),
                loglik: Some(m.loglik),
                converged: true,
            })
        })
        .collect();

    let mut cells = Vec::with_capacity(specs.len());
    let mut failures = Vec::new();
    for (spec, outcome) in specs.iter().zip(outcomes) {
        match outcome {
            Ok(cell) => cells.push(cell),
            Err(f) => {
                failures.push(f);
                cells.push(GridCell {
                    spec: *spec,
                    criteria: None,
                    loglik: None,
                    converged: false,
                });
            }
        }
    }

    // Ties go to the earlier (smaller) spec.
    let argmin = |pick: fn(&Criteria) -> f64| {
        cells
            .iter()
            .filter_map(|c| c.criteria.as_ref().map(|k| (c.spec, pick(k))))
            .fold(None, |best: Option<(ArmaSpec, f64)>, (s, v)| match best {
                Some((_, b)) if b <= v => best,
                _ => Some((s, v)),
            })
            .map(|(s, _)| s)
    };
    let (Some(best_by_aic), Some(best_by_hmean)) = (argmin(|c| c.aic_n), argmin(|c| c.hmean_n))
    else {
        return Err(Error::Numerical(format!(
            "all {} grid fits failed; first: {}",
            specs.len(),
            failures.first().map_or("", |f| f.reason.as_str())
        )));
    };
    Ok(GridResult {
        p_max,
        q_max,
        cells,
        best_by_aic,
        best_by_hmean,
        failures,
    })
}
