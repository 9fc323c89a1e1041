//! Sample autocorrelation and partial autocorrelation for model identification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::Series;

/// Smallest usable Durbin-Levinson denominator.
pub const CONDITIONING_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelogramError {
    #[error("series of length {0} is too short for a correlogram (need at least 8)")]
    TooShort(usize),
    #[error("series has missing values; impute before computing autocorrelations")]
    MissingValues,
    #[error("series is constant; autocorrelation is undefined")]
    Constant,
    #[error("lag {lag} exceeds n - 1 = {max}")]
    LagTooLarge { lag: usize, max: usize },
    #[error("partial autocorrelation recursion is ill-conditioned at lag {lag} (denominator {denominator:e})")]
    IllConditioned { lag: usize, denominator: f64 },
}

pub type Result<T> = std::result::Result<T, CorrelogramError>;

/// Largest lag worth inspecting: `floor(n / 4)`.
pub fn max_lag(n: usize) -> Result<usize> {
    if n < 8 {
        return Err(CorrelogramError::TooShort(n));
    }
    Ok(n / 4)
}

/// Half-width `2 / sqrt(n)` of the approximate 95% white-noise band.
pub fn bands(n: usize) -> Result<f64> {
    if n < 8 {
        return Err(CorrelogramError::TooShort(n));
    }
    Ok(2.0 / (n as f64).sqrt())
}

/// `r_1..r_K` with the full-sample mean and lag-0 denominator.
pub fn acf(s: &Series, max: usize) -> Result<Vec<f64>> {
    let z = s.to_dense().ok_or(CorrelogramError::MissingValues)?;
    acf_values(&z, max)
}

pub fn acf_values(z: &[f64], max: usize) -> Result<Vec<f64>> {
    let n = z.len();
    if max >= n {
        return Err(CorrelogramError::LagTooLarge {
            lag: max,
            max: n.saturating_sub(1),
        });
    }
    let mean = z.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = z.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 || !denom.is_finite() {
        return Err(CorrelogramError::Constant);
    }
    Ok((1..=max)
        .map(|k| dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// `phi_kk` for `k = 1..K` via the Durbin-Levinson recursion.
pub fn pacf(s: &Series, max: usize) -> Result<Vec<f64>> {
    pacf_from_acf(&acf(s, max)?)
}

/// Durbin-Levinson on a given autocorrelation sequence `r_1..r_K`.
pub fn pacf_from_acf(r: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(r.len());
    let mut prev: Vec<f64> = Vec::with_capacity(r.len());
    for k in 1..=r.len() {
        let (num, den) = prev.iter().enumerate().fold((r[k - 1], 1.0), |(num, den), (j, phi)| {
            // phi = phi_{k-1, j+1}
            (num - phi * r[k - 2 - j], den - phi * r[j])
        });
        if den.abs() < CONDITIONING_FLOOR {
            return Err(CorrelogramError::IllConditioned { lag: k, denominator: den });
        }
        let phi_kk = num / den;
        let mut next: Vec<f64> = (0..prev.len())
            .map(|j| prev[j] - phi_kk * prev[prev.len() - 1 - j])
            .collect();
        next.push(phi_kk);
        out.push(phi_kk);
        prev = next;
    }
    Ok(out)
}

/// ACF and PACF up to a lag with the white-noise band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    pub n: usize,
    pub lags: Vec<usize>,
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    pub band: f64,
}

impl Correlogram {
    /// Correlogram up to `max` lags, or `floor(n / 4)` when `max` is `None`.
    pub fn compute(s: &Series, max: Option<usize>) -> Result<Self> {
        let n = s.len();
        let cap = max_lag(n)?;
        let k = max.map_or(cap, |m| m.min(cap));
        let acf = acf(s, k)?;
        let pacf = pacf_from_acf(&acf)?;
        Ok(Self {
            n,
            lags: (1..=k).collect(),
            acf,
            pacf,
            band: bands(n)?,
        })
    }

    /// Lags whose ACF falls outside the band.
    pub fn acf_spikes(&self) -> Vec<usize> {
        self.lags
            .iter()
            .zip(&self.acf)
            .filter_map(|(&l, r)| (r.abs() > self.band).then_some(l))
            .collect()
    }

    pub fn pacf_spikes(&self) -> Vec<usize> {
        self.lags
            .iter()
            .zip(&self.pacf)
            .filter_map(|(&l, r)| (r.abs() > self.band).then_some(l))
            .collect()
    }

    /// `lag,acf,pacf,band` rows.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lag", "acf", "pacf", "band"])?;
        for ((lag, a), p) in self.lags.iter().zip(&self.acf).zip(&self.pacf) {
            w.write_record([lag.to_string(), a.to_string(), p.to_string(), self.band.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
