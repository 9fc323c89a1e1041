use nalgebra::{DMatrix, DVector};

use super::{poly, ArmaParams, ModelOrder, ModelError, Result};
use crate::series::Series;

/// Residual recursion over the whole of `z`.
///
/// Entries before `start` are zero; they stand for the unavailable pre-sample
/// shocks. A residual whose window touches a missing cell is also zero and is
/// flagged invalid so it stays out of the loss.
pub(crate) fn residual_path(params: &ArmaParams, z: &[Option<f64>], period: usize) -> (Vec<f64>, Vec<bool>) {
    let ar = params.ar_polynomial(period);
    let ma = params.ma_polynomial(period);
    let mu = params.mean.unwrap_or(0.0);
    let start = ar.len() - 1;
    let mut a = vec![0.0; z.len()];
    let mut valid = vec![false; z.len()];
    for t in start..z.len() {
        let Some(mut v) = ar
            .iter()
            .enumerate()
            .map(|(k, c)| z[t - k].map(|x| c * (x - mu)))
            .sum::<Option<f64>>()
        else {
            continue;
        };
        for (k, m) in ma.iter().enumerate().skip(1).take(t) {
            v -= m * a[t - k];
        }
        a[t] = v;
        valid[t] = true;
    }
    (a, valid)
}

fn checked_cells<'a>(z: &'a Series, order: &ModelOrder) -> Result<&'a [Option<f64>]> {
    let needed = order.ar_span();
    if z.len() <= needed {
        return Err(ModelError::TooShort { len: z.len(), needed });
    }
    Ok(z.cells())
}

/// Conditional residuals `a_t` for `t >= p + s P`.
///
/// `z` is the already differenced series. The result starts at offset
/// `p + s P` past the origin of `z`; residuals that depend on a missing cell
/// of `z` are missing.
pub fn css_residuals(params: &[f64], z: &Series, order: &ModelOrder, include_mean: bool) -> Result<Series> {
    let p = ArmaParams::from_vector(order, params, include_mean)?;
    let cells = checked_cells(z, order)?;
    let start = order.ar_span();
    let (a, valid) = residual_path(&p, cells, order.period);
    let out = (start..a.len()).map(|t| valid[t].then_some(a[t])).collect();
    Ok(Series::from_options(out).with_origin_offset(z.origin_offset() + start))
}

/// Conditional sum of squares.
pub fn css_loss(params: &[f64], z: &Series, order: &ModelOrder, include_mean: bool) -> Result<f64> {
    Ok(css_residuals(params, z, order, include_mean)?
        .observed()
        .map(|a| a * a)
        .sum())
}

/// Derivative of the AR and MA polynomials with respect to one parameter.
struct Partial {
    ar: Vec<f64>,
    ma: Vec<f64>,
    mean: bool,
}

fn partials(p: &ArmaParams, period: usize) -> Vec<Partial> {
    let shift = |k: usize, base: &[f64]| {
        let mut out = vec![0.0; k];
        out.extend(base.iter().map(|c| -c));
        out
    };
    let sar = poly::factor(&p.sar, period);
    let sma = poly::factor(&p.sma, period);
    let ar = poly::factor(&p.ar, 1);
    let ma = poly::factor(&p.ma, 1);
    let mut out = Vec::new();
    for i in 1..=p.ar.len() {
        out.push(Partial { ar: shift(i, &sar), ma: vec![], mean: false });
    }
    for j in 1..=p.ma.len() {
        out.push(Partial { ar: vec![], ma: shift(j, &sma), mean: false });
    }
    for i in 1..=p.sar.len() {
        out.push(Partial { ar: shift(i * period, &ar), ma: vec![], mean: false });
    }
    for j in 1..=p.sma.len() {
        out.push(Partial { ar: vec![], ma: shift(j * period, &ma), mean: false });
    }
    if p.mean.is_some() {
        out.push(Partial { ar: vec![], ma: vec![], mean: true });
    }
    out
}

/// Residuals and their analytic Jacobian with respect to the parameter vector.
///
/// Row `i` of the Jacobian corresponds to residual `i` of [`css_residuals`];
/// missing residuals appear as zero rows. The loss gradient is `2 J' a`.
pub fn css_jacobian(params: &[f64], z: &Series, order: &ModelOrder, include_mean: bool) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p = ArmaParams::from_vector(order, params, include_mean)?;
    let dense = checked_cells(z, order)?;
    let (a, _, jac) = jacobian_dense(&p, dense, order.period);
    let start = order.ar_span();
    let rows = dense.len() - start;
    let resid = DVector::from_iterator(rows, a[start..].iter().copied());
    Ok((resid, jac.rows(start, rows).into_owned()))
}

pub(crate) fn jacobian_dense(p: &ArmaParams, z: &[Option<f64>], period: usize) -> (Vec<f64>, Vec<bool>, DMatrix<f64>) {
    let (a, valid) = residual_path(p, z, period);
    let ar = p.ar_polynomial(period);
    let ma = p.ma_polynomial(period);
    let mu = p.mean.unwrap_or(0.0);
    let start = ar.len() - 1;
    let ar_at_one: f64 = ar.iter().sum();
    let parts = partials(p, period);
    let mut jac = DMatrix::zeros(z.len(), parts.len());
    for (col, part) in parts.iter().enumerate() {
        for t in (start..z.len()).filter(|&t| valid[t]) {
            let mut v = 0.0;
            for (k, c) in part.ar.iter().enumerate() {
                if *c != 0.0 {
                    v += c * (z[t - k].expect("valid row has a full window") - mu);
                }
            }
            if part.mean {
                v -= ar_at_one;
            }
            for (k, c) in part.ma.iter().enumerate().skip(1).take(t) {
                if *c != 0.0 {
                    v -= c * a[t - k];
                }
            }
            for (k, m) in ma.iter().enumerate().skip(1).take(t) {
                if *m != 0.0 {
                    v -= m * jac[(t - k, col)];
                }
            }
            jac[(t, col)] = v;
        }
    }
    (a, valid, jac)
}
