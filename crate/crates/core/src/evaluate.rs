//! Forecast accuracy against the naive last-value benchmark.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sarima::{css_residuals, FittedModel, ModelError};
use crate::series::{seasonal_difference, Series};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("naive forecast needs at least 2 values, got {0}")]
    TooShort(usize),
    #[error("series has missing values")]
    MissingValues,
    #[error("no errors to score")]
    Empty,
    #[error("naive RMSE is zero; Theil's U is undefined")]
    PerfectNaive,
    #[error("residuals start before the history they claim to come from")]
    Misaligned,
    #[error("holdout split {split} outside 1..{len}")]
    InvalidSplit { split: usize, len: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// One-step naive predictions: the prediction for `t + 1` is the value at `t`.
pub fn naive_forecast(s: &Series) -> Result<Series> {
    if s.len() < 2 {
        return Err(EvalError::TooShort(s.len()));
    }
    let y = s.to_dense().ok_or(EvalError::MissingValues)?;
    Ok(Series::from_values(&y[..y.len() - 1]).with_origin_offset(s.origin_offset() + 1))
}

/// `(mse, rmse)` of an error sequence.
pub fn rmse(errors: &[f64]) -> Result<(f64, f64)> {
    if errors.is_empty() {
        return Err(EvalError::Empty);
    }
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
    Ok((mse, mse.sqrt()))
}

pub fn theil_u(rmse_model: f64, rmse_naive: f64) -> Result<f64> {
    if rmse_naive <= 0.0 {
        return Err(EvalError::PerfectNaive);
    }
    Ok(rmse_model / rmse_naive)
}

/// Model and naive one-step errors over the same targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedErrors {
    /// Target positions in the coordinates of the history series.
    pub targets: Vec<usize>,
    pub model: Vec<f64>,
    pub naive: Vec<f64>,
}

impl AlignedErrors {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn collect(history: &Series, residual_start: usize, residuals: &[Option<f64>], from: usize) -> Self {
        let mut out = AlignedErrors {
            targets: Vec::new(),
            model: Vec::new(),
            naive: Vec::new(),
        };
        for (r, cell) in residuals.iter().enumerate() {
            let t = residual_start + r;
            if t < from.max(1) {
                continue;
            }
            let (Some(a), Some(y), Some(prev)) = (*cell, history.get(t), history.get(t - 1)) else {
                continue;
            };
            out.targets.push(t);
            out.model.push(a);
            out.naive.push(y - prev);
        }
        out
    }
}

/// In-sample one-step errors on the modeling scale.
///
/// `history` is the undifferenced series the model was fitted to (after any
/// log). Since differencing is linear, the one-step error of the integrated
/// forecast is the conditional residual itself. Naive errors `y_t - y_{t-1}`
/// are taken on the same targets.
pub fn in_sample_errors(model: &FittedModel, history: &Series) -> Result<AlignedErrors> {
    let start = model
        .residuals
        .origin_offset()
        .checked_sub(history.origin_offset())
        .ok_or(EvalError::Misaligned)?;
    Ok(AlignedErrors::collect(history, start, model.residuals.cells(), 0))
}

/// One-step errors for targets at or after `split`, using the fitted
/// coefficients unchanged over the whole of `history`.
pub fn holdout_errors(model: &FittedModel, history: &Series, split: usize) -> Result<AlignedErrors> {
    if split == 0 || split >= history.len() {
        return Err(EvalError::InvalidSplit {
            split,
            len: history.len(),
        });
    }
    let o = &model.order;
    let mut z = history.clone();
    for _ in 0..o.d {
        z = seasonal_difference(&z, 1).map_err(ModelError::from)?;
    }
    for _ in 0..o.seasonal_d {
        z = seasonal_difference(&z, o.period).map_err(ModelError::from)?;
    }
    let a = css_residuals(&model.params, &z, o, model.include_mean)?;
    let start = a.origin_offset() - history.origin_offset();
    Ok(AlignedErrors::collect(history, start, a.cells(), split))
}

/// Interpretation attached to a Theil's U value.
pub fn verdict(u: f64) -> &'static str {
    if u < 1.0 {
        "better than naive"
    } else {
        "not better than naive"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub label: String,
    pub mse_model: f64,
    pub rmse_model: f64,
    pub mse_naive: f64,
    pub rmse_naive: f64,
    pub theil_u: f64,
    /// Number of scored errors.
    pub n: usize,
    pub verdict: String,
}

impl EvaluationReport {
    pub fn from_errors(label: impl Into<String>, model: &[f64], naive: &[f64]) -> Result<Self> {
        let (mse_model, rmse_model) = rmse(model)?;
        let (mse_naive, rmse_naive) = rmse(naive)?;
        let u = theil_u(rmse_model, rmse_naive)?;
        Ok(Self {
            label: label.into(),
            mse_model,
            rmse_model,
            mse_naive,
            rmse_naive,
            theil_u: u,
            n: model.len(),
            verdict: verdict(u).to_string(),
        })
    }

    pub fn from_aligned(label: impl Into<String>, e: &AlignedErrors) -> Result<Self> {
        Self::from_errors(label, &e.model, &e.naive)
    }

    /// Table layout: one row per model plus U.
    pub fn table(&self, model_name: &str) -> EvaluationTable {
        EvaluationTable {
            label: self.label.clone(),
            rows: vec![
                EvaluationRow {
                    model: model_name.to_string(),
                    mse: self.mse_model,
                    rmse: self.rmse_model,
                },
                EvaluationRow {
                    model: "Naive".to_string(),
                    mse: self.mse_naive,
                    rmse: self.rmse_naive,
                },
            ],
            theil_u: self.theil_u,
            n: self.n,
            verdict: self.verdict.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub model: String,
    pub mse: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationTable {
    pub label: String,
    pub rows: Vec<EvaluationRow>,
    pub theil_u: f64,
    pub n: usize,
    pub verdict: String,
}
