//! Multiplicative seasonal ARIMA `(p, d, q) x (P, D, Q)_s`.
//!
//! The model for the differenced series `z_t = (1 - B)^d (1 - B^s)^D y_t` is
//!
//! ```text
//! phi(B) Phi(B^s) (z_t - mu) = theta(B) Theta(B^s) a_t
//! ```
//!
//! with `phi(B) = 1 - phi_1 B - ... - phi_p B^p` and the moving-average
//! polynomials written the same way, so a positive `theta_1` subtracts
//! `theta_1 a_{t-1}`.
//!
//! Estimation is conditional least squares: pre-sample shocks are zero and the
//! sum of squared residuals is minimized by damped Gauss-Newton.

mod css;
mod fit;
mod forecast;
pub mod poly;
mod simulate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use css::{css_jacobian, css_loss, css_residuals};
pub use fit::{fit, fit_with, Coefficient, Convergence, FitOptions, FittedModel, ModelReport, StopReason};
pub use forecast::{forecast, psi_weights, ForecastResult};
pub use simulate::simulate_sarima;

use crate::series::SeriesError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model order: {0}")]
    InvalidOrder(String),
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("series has missing values; impute before estimation")]
    MissingValues,
    #[error("series of length {len} is too short: need more than {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("need at least {needed} effective observations for {params} parameters, got {got}")]
    InsufficientData { needed: usize, got: usize, params: usize },
    #[error("coefficients violate stationarity or invertibility: {0}")]
    NotStationary(String),
    #[error(
        "no convergence after {iterations} iterations (loss {loss}, gradient max-norm {gradient:e}, params {params:?})"
    )]
    NoConvergence {
        iterations: usize,
        loss: f64,
        gradient: f64,
        params: Vec<f64>,
    },
    #[error("normal matrix is singular; parameters are not identifiable")]
    Singular,
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Orders of the non-seasonal and seasonal parts and the season length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_d: usize,
    pub seasonal_q: usize,
    pub period: usize,
}

impl ModelOrder {
    pub fn new(
        (p, d, q): (usize, usize, usize),
        (seasonal_p, seasonal_d, seasonal_q): (usize, usize, usize),
        period: usize,
    ) -> Result<Self> {
        let order = Self {
            p,
            d,
            q,
            seasonal_p,
            seasonal_d,
            seasonal_q,
            period,
        };
        if order.has_seasonal_part() && period < 2 {
            return Err(ModelError::InvalidOrder(format!(
                "season length must be at least 2 with seasonal terms, got {period}"
            )));
        }
        if d > 2 {
            return Err(ModelError::InvalidOrder(format!("non-seasonal differencing {d} exceeds 2")));
        }
        Ok(order)
    }

    /// Non-seasonal ARMA order with no differencing.
    pub fn arma(p: usize, q: usize) -> Self {
        Self {
            p,
            d: 0,
            q,
            seasonal_p: 0,
            seasonal_d: 0,
            seasonal_q: 0,
            period: 1,
        }
    }

    pub fn has_seasonal_part(&self) -> bool {
        self.seasonal_p + self.seasonal_d + self.seasonal_q > 0
    }

    /// Count of ARMA coefficients, excluding any mean.
    pub fn arma_count(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    pub fn param_count(&self, include_mean: bool) -> usize {
        self.arma_count() + usize::from(include_mean)
    }

    /// Observations consumed by differencing: `d + s D`.
    pub fn differencing_span(&self) -> usize {
        self.d + self.period * self.seasonal_d
    }

    /// First residual index of the conditional recursion: `p + s P`.
    pub fn ar_span(&self) -> usize {
        self.p + self.period * self.seasonal_p
    }

    /// First computable index (1-based) of the differenced series, `s D + d + 1`.
    pub fn first_computable_index(&self) -> usize {
        self.differencing_span() + 1
    }

    /// Parameter names in vector order: `ar*`, `ma*`, `sar*`, `sma*`, then `mean`.
    pub fn param_names(&self, include_mean: bool) -> Vec<(String, usize)> {
        let s = self.period;
        let mut out = Vec::new();
        out.extend((1..=self.p).map(|i| (format!("ar{i}"), i)));
        out.extend((1..=self.q).map(|i| (format!("ma{i}"), i)));
        out.extend((1..=self.seasonal_p).map(|i| (format!("sar{i}"), i * s)));
        out.extend((1..=self.seasonal_q).map(|i| (format!("sma{i}"), i * s)));
        if include_mean {
            out.push(("mean".to_string(), 0));
        }
        out
    }
}

/// Coefficients split by role.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArmaParams {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sar: Vec<f64>,
    pub sma: Vec<f64>,
    pub mean: Option<f64>,
}

impl ArmaParams {
    pub fn from_vector(order: &ModelOrder, v: &[f64], include_mean: bool) -> Result<Self> {
        let expected = order.param_count(include_mean);
        if v.len() != expected {
            return Err(ModelError::ParameterCount { expected, got: v.len() });
        }
        let mut it = v.iter().copied();
        let mut take = |k: usize| it.by_ref().take(k).collect::<Vec<_>>();
        let ar = take(order.p);
        let ma = take(order.q);
        let sar = take(order.seasonal_p);
        let sma = take(order.seasonal_q);
        let mean = include_mean.then(|| take(1)[0]);
        Ok(Self { ar, ma, sar, sma, mean })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = [&self.ar, &self.ma, &self.sar, &self.sma]
            .into_iter()
            .flatten()
            .copied()
            .collect();
        v.extend(self.mean);
        v
    }

    /// `phi(B) Phi(B^s)` expanded.
    pub fn ar_polynomial(&self, period: usize) -> Vec<f64> {
        poly::mul(&poly::factor(&self.ar, 1), &poly::factor(&self.sar, period))
    }

    /// `theta(B) Theta(B^s)` expanded.
    pub fn ma_polynomial(&self, period: usize) -> Vec<f64> {
        poly::mul(&poly::factor(&self.ma, 1), &poly::factor(&self.sma, period))
    }

    /// Checks each factor separately against [`poly::ROOT_MARGIN`].
    pub fn check_admissible(&self) -> Result<()> {
        let checks = [
            ("ar", &self.ar),
            ("ma", &self.ma),
            ("seasonal ar", &self.sar),
            ("seasonal ma", &self.sma),
        ];
        for (name, coefs) in checks {
            if !poly::roots_outside_unit_circle(coefs, poly::ROOT_MARGIN) {
                return Err(ModelError::NotStationary(format!("{name} polynomial {coefs:?}")));
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self) -> bool {
        self.check_admissible().is_ok()
    }
}
