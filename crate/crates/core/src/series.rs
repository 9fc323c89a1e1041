//! Series container, stationarity transforms and summary statistics.
//!
//! A [`Series`] stores each cell as `Option<f64>`, so a missing cell can never
//! take part in arithmetic. Transforms append to the series history, which is
//! what lets forecasts be mapped back onto the original scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("log transform undefined at index {index}: value {value} (shifted by offset {offset})")]
    NonPositive { index: usize, value: f64, offset: f64 },
    #[error("series of length {len} is too short for lag {lag}")]
    TooShort { len: usize, lag: usize },
    #[error("lag must be positive")]
    ZeroLag,
    #[error("expected {expected} initial values, got {got}")]
    InitialLength { expected: usize, got: usize },
    #[error("need at least {needed} observed values, got {got}")]
    InsufficientObservations { needed: usize, got: usize },
    #[error("invalid first computable index b={b} for n={n}: need n - b + 1 >= 2")]
    InvalidFirstIndex { n: usize, b: usize },
    #[error("last transform step is {found}, expected {expected}")]
    HistoryMismatch { expected: &'static str, found: String },
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// One recorded step of the transform history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    /// `ln(x + offset)`.
    Log { offset: f64 },
    /// `x_t - x_{t-lag}`.
    Difference { lag: usize },
}

impl Transform {
    fn name(&self) -> String {
        match self {
            Transform::Log { offset } => format!("log(offset={offset})"),
            Transform::Difference { lag } => format!("diff({lag})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<Option<f64>>,
    /// Index of the first cell relative to the untransformed series.
    origin_offset: usize,
    history: Vec<Transform>,
}

impl Series {
    /// Fully observed series.
    pub fn from_values(values: &[f64]) -> Self {
        Self::from_options(values.iter().copied().map(Some).collect())
    }

    pub fn from_options(values: Vec<Option<f64>>) -> Self {
        Self {
            values,
            origin_offset: 0,
            history: Vec::new(),
        }
    }

    pub fn with_origin_offset(mut self, offset: usize) -> Self {
        self.origin_offset = offset;
        self
    }

    pub fn with_history(mut self, history: Vec<Transform>) -> Self {
        self.history = history;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied().flatten()
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.values
    }

    /// `true` where observed.
    pub fn mask(&self) -> Vec<bool> {
        self.values.iter().map(Option::is_some).collect()
    }

    pub fn observed_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Observed values in order, skipping missing cells.
    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }

    /// Dense copy of the values, or `None` if any cell is missing.
    pub fn to_dense(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }

    /// Indices of missing cells.
    pub fn missing_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.is_none().then_some(i))
            .collect()
    }

    pub fn origin_offset(&self) -> usize {
        self.origin_offset
    }

    pub fn history(&self) -> &[Transform] {
        &self.history
    }

    /// Same metadata, different cells.
    pub(crate) fn with_cells(&self, values: Vec<Option<f64>>) -> Self {
        Self {
            values,
            origin_offset: self.origin_offset,
            history: self.history.clone(),
        }
    }

    pub(crate) fn set(&mut self, index: usize, value: f64) {
        self.values[index] = Some(value);
    }

    pub(crate) fn shift_origin(&mut self, by: usize) {
        self.origin_offset += by;
    }

    /// Appends an observed value at the end.
    pub fn push(&mut self, value: f64) {
        self.values.push(Some(value));
    }

    /// Last `k` cells.
    pub fn tail(&self, k: usize) -> &[Option<f64>] {
        &self.values[self.values.len().saturating_sub(k)..]
    }

    /// First `k` cells as a fresh series with the same metadata.
    pub fn truncate(&self, k: usize) -> Self {
        self.with_cells(self.values[..k.min(self.values.len())].to_vec())
    }

    /// `index,value,observed` rows; `index` counts from the untransformed
    /// origin and missing cells are written as `NA`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "value", "observed"])?;
        for (i, v) in self.values.iter().enumerate() {
            let (value, flag) = match v {
                Some(x) => (x.to_string(), "1"),
                None => ("NA".to_string(), "0"),
            };
            w.write_record([(self.origin_offset + i).to_string(), value, flag.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Transform history and origin as JSON, so a consumer of the CSV can map
    /// values back to the original scale.
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&Sidecar {
            origin_offset: self.origin_offset,
            history: self.history.clone(),
        })
        .expect("sidecar serializes")
    }

    /// Restores metadata written by [`Series::sidecar_json`].
    pub fn with_sidecar_json(self, json: &str) -> serde_json::Result<Self> {
        let Sidecar { origin_offset, history } = serde_json::from_str(json)?;
        Ok(self.with_origin_offset(origin_offset).with_history(history))
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    origin_offset: usize,
    history: Vec<Transform>,
}

/// Natural log of every observed value, shifted by `offset` (0 disables the
/// offset).
pub fn log_transform(s: &Series, offset: f64) -> Result<Series> {
    let mut cells = Vec::with_capacity(s.len());
    for (index, v) in s.values.iter().enumerate() {
        cells.push(match v {
            Some(x) if x + offset > 0.0 => Some((x + offset).ln()),
            Some(x) => {
                return Err(SeriesError::NonPositive {
                    index,
                    value: *x,
                    offset,
                })
            }
            None => None,
        });
    }
    let mut out = s.with_cells(cells);
    out.history.push(Transform::Log { offset });
    Ok(out)
}

/// Inverse of [`log_transform`]; pops the log step from the history.
pub fn exp_transform(s: &Series) -> Result<Series> {
    let offset = match s.history.last() {
        Some(Transform::Log { offset }) => *offset,
        other => {
            return Err(SeriesError::HistoryMismatch {
                expected: "log",
                found: other.map_or("none".into(), Transform::name),
            })
        }
    };
    let mut out = s.with_cells(s.values.iter().map(|v| v.map(|x| x.exp() - offset)).collect());
    out.history.pop();
    Ok(out)
}

/// `z_t = y_t - y_{t-lag}`. A pair with a missing member yields a missing cell.
pub fn seasonal_difference(s: &Series, lag: usize) -> Result<Series> {
    if lag == 0 {
        return Err(SeriesError::ZeroLag);
    }
    if s.len() <= lag {
        return Err(SeriesError::TooShort { len: s.len(), lag });
    }
    let cells = (lag..s.len())
        .map(|t| match (s.values[t], s.values[t - lag]) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        })
        .collect();
    let mut out = s.with_cells(cells);
    out.origin_offset += lag;
    out.history.push(Transform::Difference { lag });
    Ok(out)
}

/// Rebuilds `y_t = z_t + y_{t-lag}` from the `lag` values preceding `z`.
///
/// The output covers the same range as `z`; `initial` is not repeated.
pub fn undifference(z: &Series, initial: &[Option<f64>], lag: usize) -> Result<Series> {
    if lag == 0 {
        return Err(SeriesError::ZeroLag);
    }
    if initial.len() != lag {
        return Err(SeriesError::InitialLength {
            expected: lag,
            got: initial.len(),
        });
    }
    let mut full: Vec<Option<f64>> = initial.to_vec();
    full.reserve(z.len());
    for (t, dz) in z.values.iter().enumerate() {
        let prev = full[t];
        full.push(match (dz, prev) {
            (Some(d), Some(p)) => Some(d + p),
            _ => None,
        });
    }
    let mut out = z.with_cells(full.split_off(lag));
    out.origin_offset = z.origin_offset.saturating_sub(lag);
    if matches!(out.history.last(), Some(Transform::Difference { lag: l }) if *l == lag) {
        out.history.pop();
    }
    Ok(out)
}

/// Sample mean and standard deviation (n - 1 divisor) of the observed values.
pub fn mean_sd(s: &Series) -> Result<(f64, f64)> {
    let n = s.observed_count();
    if n < 2 {
        return Err(SeriesError::InsufficientObservations { needed: 2, got: n });
    }
    let mean = s.observed().sum::<f64>() / n as f64;
    let ss: f64 = s.observed().map(|x| (x - mean).powi(2)).sum();
    Ok((mean, (ss / (n - 1) as f64).sqrt()))
}

/// t-test for retaining a constant in the model of a differenced series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanTest {
    pub mean: f64,
    pub sd: f64,
    /// Observation count before differencing.
    pub n: usize,
    /// First computable index of the differenced series (1-based).
    pub b: usize,
    pub t_value: f64,
}

impl MeanTest {
    pub fn from_moments(mean: f64, sd: f64, n: usize, b: usize) -> Result<Self> {
        if b == 0 || b > n || n - b + 1 < 2 {
            return Err(SeriesError::InvalidFirstIndex { n, b });
        }
        let t_value = if mean == 0.0 {
            0.0
        } else {
            mean / (sd / ((n - b + 1) as f64).sqrt())
        };
        Ok(Self {
            mean,
            sd,
            n,
            b,
            t_value,
        })
    }

    /// The mean is kept only when `|t| >= 2`.
    pub fn retain_mean(&self) -> bool {
        self.t_value.abs() >= 2.0
    }
}

/// Mean-retention test for `s` (the working series) where `n` is the
/// pre-differencing observation count and `b` the first computable index.
pub fn mean_significance(s: &Series, n: usize, b: usize) -> Result<MeanTest> {
    let (mean, sd) = mean_sd(s)?;
    MeanTest::from_moments(mean, sd, n, b)
}
