//! Exponential-weight moving-average filter and missing-value estimation.
//!
//! The filter averages the current value and the `M` values before it with
//! weights proportional to `phi, phi^2, ..., phi^(M+1)`, so the most recent
//! observation carries the largest weight. A hole is estimated by running the
//! filter at the hole with the hole's own slot taken by the mean of the
//! observed data.
//!
//! Four simpler imputers are provided for comparison: series mean, naive
//! (last value), linear trend fitted on the points before the hole, and the
//! average of the two observations bounding the hole.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlogram::{self, CorrelogramError};
use crate::series::Series;

/// Window length used when none is given: one seasonal period.
pub const DEFAULT_WINDOW: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImputeError {
    #[error("phi must lie in (0, 1), got {0}")]
    InvalidPhi(f64),
    #[error("lag-1 autocorrelation {0} is not in (0, 1); supply phi manually")]
    NonPositivePhi(f64),
    #[error("series has missing values; filter requires a fully observed series")]
    MissingValues,
    #[error("need at least {needed} observed values, got {got}")]
    InsufficientObservations { needed: usize, got: usize },
    #[error("series of length {len} is too short for window {window}")]
    TooShort { len: usize, window: usize },
    #[error("{strategy} imputation cannot fill hole {index}: {reason}")]
    Unsatisfiable {
        strategy: Strategy,
        index: usize,
        reason: &'static str,
    },
    #[error(transparent)]
    Correlogram(#[from] CorrelogramError),
}

pub type Result<T> = std::result::Result<T, ImputeError>;

/// Correlation base `phi` and window length `M` of the filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    phi: f64,
    window: usize,
    normalize: bool,
}

impl FilterSpec {
    pub fn new(phi: f64, window: usize) -> Result<Self> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(ImputeError::InvalidPhi(phi));
        }
        Ok(Self {
            phi,
            window,
            normalize: true,
        })
    }

    /// Uses the raw powers `phi^(i+1)` as weights without dividing by their sum.
    pub fn unnormalized(mut self) -> Self {
        self.normalize = false;
        self
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn is_normalized(&self) -> bool {
        self.normalize
    }

    /// Raw weights `phi^(i+1)` for `i = 0..=M`.
    pub fn raw_weights(&self) -> Vec<f64> {
        (0..=self.window).map(|i| self.phi.powi(i as i32 + 1)).collect()
    }

    /// Weights for slots `0..slots`, rescaled to sum to one when normalizing.
    fn weights(&self, slots: usize) -> Vec<f64> {
        let mut w = self.raw_weights();
        w.truncate(slots);
        if self.normalize {
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
        }
        w
    }

    /// Weights for the full window.
    pub fn weights_full(&self) -> Vec<f64> {
        self.weights(self.window + 1)
    }
}

/// Lag-1 autocorrelation of the observed values, used as `phi`.
///
/// Missing cells drop out of the mean and denominator; the numerator uses
/// only adjacent pairs that are both observed.
pub fn estimate_phi(s: &Series) -> Result<f64> {
    let n = s.observed_count();
    if n < 3 {
        return Err(ImputeError::InsufficientObservations { needed: 3, got: n });
    }
    let r1 = if s.is_fully_observed() {
        correlogram::acf(s, 1)?[0]
    } else {
        let mean = s.observed().sum::<f64>() / n as f64;
        let denom: f64 = s.observed().map(|x| (x - mean).powi(2)).sum();
        if denom == 0.0 {
            return Err(CorrelogramError::Constant.into());
        }
        let num: f64 = s
            .cells()
            .windows(2)
            .filter_map(|w| Some((w[0]? - mean) * (w[1]? - mean)))
            .sum();
        num / denom
    };
    if r1 > 0.0 && r1 < 1.0 {
        Ok(r1)
    } else {
        Err(ImputeError::NonPositivePhi(r1))
    }
}

/// Filtered series `y_t = sum_i w_{i+1} x_{t-i}` for `t = M..n-1`.
///
/// The first `M` positions have no full window and are dropped; the origin
/// offset grows by `M`.
pub fn filter_series(s: &Series, spec: &FilterSpec) -> Result<Series> {
    let x = s.to_dense().ok_or(ImputeError::MissingValues)?;
    let m = spec.window;
    if x.len() <= m {
        return Err(ImputeError::TooShort { len: x.len(), window: m });
    }
    let w = spec.weights_full();
    let cells = (m..x.len())
        .map(|t| Some(w.iter().enumerate().map(|(i, wi)| wi * x[t - i]).sum()))
        .collect();
    let mut out = s.with_cells(cells);
    out.shift_origin(m);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Filter,
    Mean,
    Naive,
    Trend,
    BoundingAverage,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Filter => "filter",
            Strategy::Mean => "mean",
            Strategy::Naive => "naive",
            Strategy::Trend => "trend",
            Strategy::BoundingAverage => "bounding_average",
        })
    }
}

/// One filled hole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub index: usize,
    pub value: f64,
    /// Number of filter slots (own slot included) that fed the estimate.
    pub window_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    pub series: Series,
    pub filled: BTreeMap<usize, f64>,
    pub fills: Vec<Fill>,
    pub strategy: Strategy,
    pub spec: Option<FilterSpec>,
    /// Mean of the originally observed values.
    pub fill_mean: f64,
}

/// Serializable summary of an imputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub strategy: Strategy,
    pub spec: Option<FilterSpec>,
    pub fill_mean: f64,
    pub holes: Vec<Fill>,
}

impl ImputationResult {
    pub fn report(&self) -> ImputationReport {
        ImputationReport {
            strategy: self.strategy,
            spec: self.spec,
            fill_mean: self.fill_mean,
            holes: self.fills.clone(),
        }
    }
}

fn observed_mean(s: &Series, needed: usize) -> Result<f64> {
    let n = s.observed_count();
    if n < needed.max(1) {
        return Err(ImputeError::InsufficientObservations { needed, got: n });
    }
    Ok(s.observed().sum::<f64>() / n as f64)
}

fn finish(series: Series, fills: Vec<Fill>, strategy: Strategy, spec: Option<FilterSpec>, fill_mean: f64) -> ImputationResult {
    ImputationResult {
        series,
        filled: fills.iter().map(|f| (f.index, f.value)).collect(),
        fills,
        strategy,
        spec,
        fill_mean,
    }
}

/// Fills every hole left to right with the filter estimate.
///
/// At hole `s` the own slot takes the observed mean and slots `s-1..s-M` take
/// observed or already-filled values. Near the series start the window is cut
/// to the available slots and its weights rescaled.
pub fn impute(s: &Series, spec: &FilterSpec) -> Result<ImputationResult> {
    let fill_mean = observed_mean(s, 2)?;
    let mut out = s.clone();
    let mut fills = Vec::new();
    for hole in s.missing_indices() {
        let slots = (spec.window + 1).min(hole + 1);
        let w = spec.weights(slots);
        let value = w[0] * fill_mean
            + (1..slots)
                .map(|i| w[i] * out.get(hole - i).expect("earlier cells are filled"))
                .sum::<f64>();
        out.set(hole, value);
        fills.push(Fill {
            index: hole,
            value,
            window_used: slots,
        });
    }
    Ok(finish(out, fills, Strategy::Filter, Some(*spec), fill_mean))
}

/// Fills holes with one of the simple strategies.
pub fn baseline_impute(s: &Series, strategy: Strategy) -> Result<ImputationResult> {
    let fill_mean = observed_mean(s, 1)?;
    let mut out = s.clone();
    let mut fills = Vec::new();
    let unsat = |index, reason| ImputeError::Unsatisfiable {
        strategy,
        index,
        reason,
    };
    for hole in s.missing_indices() {
        let value = match strategy {
            Strategy::Mean => fill_mean,
            Strategy::Naive => match hole.checked_sub(1).and_then(|p| out.get(p)) {
                Some(v) => v,
                None => return Err(unsat(hole, "no value before the hole")),
            },
            Strategy::Trend => {
                let pts: Vec<(f64, f64)> = (0..hole).filter_map(|t| Some((t as f64, s.get(t)?))).collect();
                trend_at(&pts, hole as f64).ok_or_else(|| unsat(hole, "fewer than 2 distinct observed points before the hole"))?
            }
            Strategy::BoundingAverage => {
                let before = (0..hole).rev().find_map(|t| s.get(t));
                let after = (hole + 1..s.len()).find_map(|t| s.get(t));
                match (before, after) {
                    (Some(a), Some(b)) => 0.5 * (a + b),
                    _ => return Err(unsat(hole, "hole is not bounded by observations on both sides")),
                }
            }
            Strategy::Filter => {
                let spec = FilterSpec::new(estimate_phi(s)?, DEFAULT_WINDOW)?;
                return impute(s, &spec);
            }
        };
        out.set(hole, value);
        fills.push(Fill {
            index: hole,
            value,
            window_used: 0,
        });
    }
    Ok(finish(out, fills, strategy, None, fill_mean))
}

/// Least-squares line `a + b t` through `pts`, evaluated at `at`.
fn trend_at(pts: &[(f64, f64)], at: f64) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let b = sxy / sxx;
    let a = ym - b * tm;
    Some(a + b * at)
}
