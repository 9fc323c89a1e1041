use serde::{Deserialize, Serialize};

use super::css::residual_path;
use super::{poly, FittedModel, ModelError, Result};
use crate::series::{Series, Transform};
use crate::special::normal_quantile;

/// Point forecasts with symmetric normal intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub horizon: usize,
    pub level: f64,
    /// Index of the first forecast in the coordinates of the history series.
    pub first_index: usize,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub psi: Vec<f64>,
    /// Point and bounds mapped back through a trailing log transform.
    pub original_scale: Option<OriginalScale>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginalScale {
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ForecastResult {
    /// `step,point,lower,upper` plus `original_*` columns when available.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["step", "point", "lower", "upper"];
        if self.original_scale.is_some() {
            header.extend(["original_scale_point", "original_scale_lower", "original_scale_upper"]);
        }
        w.write_record(&header)?;
        for h in 0..self.horizon {
            let mut row = vec![
                (h + 1).to_string(),
                self.point[h].to_string(),
                self.lower[h].to_string(),
                self.upper[h].to_string(),
            ];
            if let Some(o) = &self.original_scale {
                row.extend([o.point[h].to_string(), o.lower[h].to_string(), o.upper[h].to_string()]);
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `psi_0..psi_{h-1}` of `theta(B) Theta(B^s) / (phi(B) Phi(B^s) (1-B)^d (1-B^s)^D)`.
pub fn psi_weights(model: &FittedModel, horizon: usize) -> Vec<f64> {
    let p = model.arma_params();
    let o = &model.order;
    let denom = poly::mul(
        &p.ar_polynomial(o.period),
        &poly::differencing(o.d, o.seasonal_d, o.period),
    );
    let numer = p.ma_polynomial(o.period);
    let mut psi = Vec::with_capacity(horizon);
    for j in 0..horizon {
        let mut v = numer.get(j).copied().unwrap_or(0.0);
        for k in 1..=j.min(denom.len() - 1) {
            v -= denom[k] * psi[j - k];
        }
        psi.push(v);
    }
    psi
}

/// Forecasts `horizon` steps past the end of `history`.
///
/// `history` is the series before differencing, on the modeling scale (after
/// any log). Known shocks come from the conditional residuals of `history`;
/// future shocks are zero. Bounds are `point +/- q sqrt(sigma2 sum psi_j^2)`.
pub fn forecast(model: &FittedModel, history: &Series, horizon: usize, level: f64) -> Result<ForecastResult> {
    if horizon == 0 {
        return Err(ModelError::ZeroHorizon);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ModelError::InvalidLevel(level));
    }
    let y = history.to_dense().ok_or(ModelError::MissingValues)?;
    let o = &model.order;
    let params = model.arma_params();
    let diff = poly::differencing(o.d, o.seasonal_d, o.period);
    let span = diff.len() - 1;
    let needed = span + o.ar_span();
    if y.len() <= needed {
        return Err(ModelError::TooShort { len: y.len(), needed });
    }

    let z: Vec<Option<f64>> = (span..y.len())
        .map(|t| Some(diff.iter().enumerate().map(|(k, c)| c * y[t - k]).sum()))
        .collect();
    let (mut shocks, _) = residual_path(&params, &z, o.period);
    let ar = params.ar_polynomial(o.period);
    let ma = params.ma_polynomial(o.period);
    let mu = params.mean.unwrap_or(0.0);
    let mut w: Vec<f64> = z.iter().map(|v| v.expect("dense") - mu).collect();
    let mut y_ext = y.clone();
    let mut point = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let t = w.len();
        let mut next = 0.0;
        for (k, c) in ar.iter().enumerate().skip(1) {
            next -= c * w[t - k];
        }
        for (k, m) in ma.iter().enumerate().skip(1) {
            if k <= t {
                next += m * shocks[t - k];
            }
        }
        w.push(next);
        shocks.push(0.0);
        let ty = y_ext.len();
        let mut yt = next + mu;
        for (k, c) in diff.iter().enumerate().skip(1) {
            yt -= c * y_ext[ty - k];
        }
        y_ext.push(yt);
        point.push(yt);
    }

    let psi = psi_weights(model, horizon);
    let q = normal_quantile(0.5 * (1.0 + level));
    let mut acc = 0.0;
    let half: Vec<f64> = psi
        .iter()
        .map(|p| {
            acc += p * p;
            q * (model.sigma2 * acc).sqrt()
        })
        .collect();
    let lower: Vec<f64> = point.iter().zip(&half).map(|(p, h)| p - h).collect();
    let upper: Vec<f64> = point.iter().zip(&half).map(|(p, h)| p + h).collect();
    let original_scale = match history.history().last() {
        Some(Transform::Log { offset }) => {
            let back = |v: &[f64]| v.iter().map(|x| x.exp() - offset).collect::<Vec<_>>();
            Some(OriginalScale {
                point: back(&point),
                lower: back(&lower),
                upper: back(&upper),
            })
        }
        _ => None,
    };
    Ok(ForecastResult {
        horizon,
        level,
        first_index: y.len(),
        point,
        lower,
        upper,
        psi,
        original_scale,
    })
}
