//! Ljung-Box portmanteau checks of model residuals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlogram::{self, CorrelogramError};
use crate::sarima::FittedModel;
use crate::special::gamma_q;

/// Lags reported by default.
pub const DEFAULT_LAGS: [usize; 6] = [6, 12, 18, 24, 30, 36];

/// Significance level of the adequacy verdict.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("lag K={k} must exceed the number of fitted coefficients {n_c}")]
    NoDegreesOfFreedom { k: usize, n_c: usize },
    #[error("effective sample size {n_prime} must exceed K={k}")]
    SampleTooSmall { n_prime: usize, k: usize },
    #[error("K={k} exceeds the {available} residual autocorrelations supplied")]
    NotEnoughLags { k: usize, available: usize },
    #[error("{len} residuals are too few for lag {k}")]
    ResidualsTooShort { len: usize, k: usize },
    #[error("no lags requested")]
    NoLags,
    #[error(transparent)]
    Correlogram(#[from] CorrelogramError),
}

pub type Result<T> = std::result::Result<T, DiagnosticsError>;

/// Upper tail `P(X > x)` of a chi-square variable with `dof` degrees of freedom.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    assert!(dof > 0, "chi-square needs positive degrees of freedom");
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(dof as f64 / 2.0, x / 2.0)
}

/// The `x` with `chi_square_sf(x, dof) = alpha`, by bracketing bisection.
pub fn chi_square_quantile(alpha: f64, dof: usize) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1), got {alpha}");
    let mut lo = 0.0;
    let mut hi = (dof as f64).max(1.0);
    while chi_square_sf(hi, dof) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if chi_square_sf(mid, dof) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub q_star: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Residual autocorrelations at lags `K-5..=K`, the block a table row shows.
    pub autocorrelations: Vec<f64>,
}

impl LjungBoxRow {
    /// Rejects adequacy at level `alpha` via the p-value.
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// `Q* = n'(n'+2) sum_{l=1}^{K} r_l^2 / (n' - l)` against chi-square with
/// `K - n_c` degrees of freedom.
pub fn ljung_box(residual_acf: &[f64], n_prime: usize, k: usize, n_c: usize) -> Result<LjungBoxRow> {
    if k <= n_c {
        return Err(DiagnosticsError::NoDegreesOfFreedom { k, n_c });
    }
    if n_prime <= k {
        return Err(DiagnosticsError::SampleTooSmall { n_prime, k });
    }
    if k > residual_acf.len() {
        return Err(DiagnosticsError::NotEnoughLags {
            k,
            available: residual_acf.len(),
        });
    }
    let n = n_prime as f64;
    let sum: f64 = residual_acf[..k]
        .iter()
        .enumerate()
        .map(|(i, r)| r * r / (n - (i + 1) as f64))
        .sum();
    let q_star = n * (n + 2.0) * sum;
    let dof = k - n_c;
    Ok(LjungBoxRow {
        k,
        q_star,
        dof,
        p_value: chi_square_sf(q_star, dof),
        autocorrelations: residual_acf[k.saturating_sub(6)..k].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Adequate,
    Inadequate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdequacyReport {
    pub n_prime: usize,
    pub n_c: usize,
    pub alpha: f64,
    pub rows: Vec<LjungBoxRow>,
    pub verdict: Verdict,
    /// Residual autocorrelations up to the largest requested lag.
    pub residual_acf: Vec<f64>,
}

impl AdequacyReport {
    /// `lag,acf,band` rows for plotting the residual correlogram.
    pub fn write_acf_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let band = 2.0 / (self.n_prime as f64).sqrt();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lag", "acf", "band"])?;
        for (i, r) in self.residual_acf.iter().enumerate() {
            w.write_record([(i + 1).to_string(), r.to_string(), band.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ljung-Box rows for each of `lags` and the overall verdict on a residual
/// sequence; missing residuals are skipped.
pub fn adequacy_from_residuals(residuals: &[f64], n_c: usize, lags: &[usize]) -> Result<AdequacyReport> {
    let kmax = *lags.iter().max().ok_or(DiagnosticsError::NoLags)?;
    if residuals.len() <= kmax {
        return Err(DiagnosticsError::ResidualsTooShort {
            len: residuals.len(),
            k: kmax,
        });
    }
    let acf = correlogram::acf_values(residuals, kmax)?;
    let n_prime = residuals.len();
    let rows = lags
        .iter()
        .map(|&k| ljung_box(&acf, n_prime, k, n_c))
        .collect::<Result<Vec<_>>>()?;
    let verdict = if rows.iter().all(|r| r.p_value > ALPHA) {
        Verdict::Adequate
    } else {
        Verdict::Inadequate
    };
    Ok(AdequacyReport {
        n_prime,
        n_c,
        alpha: ALPHA,
        rows,
        verdict,
        residual_acf: acf,
    })
}

/// Adequacy of a fitted model. `n'` is the residual count and `n_c` the number
/// of ARMA coefficients (a fitted mean is not counted).
pub fn adequacy_report(model: &FittedModel, lags: &[usize]) -> Result<AdequacyReport> {
    let residuals: Vec<f64> = model.residuals.observed().collect();
    adequacy_from_residuals(&residuals, model.order.arma_count(), lags)
}
