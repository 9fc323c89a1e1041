use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::css::{jacobian_dense, residual_path};
use super::{ArmaParams, ModelError, ModelOrder, Result};
use crate::series::Series;
use crate::special::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when the max-norm of the loss gradient falls below this.
    pub gradient_tolerance: f64,
    /// Stop when an accepted step lowers the loss by less than this fraction.
    pub relative_loss_tolerance: f64,
    /// Required effective observations per estimated parameter.
    pub observations_per_parameter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-8,
            relative_loss_tolerance: 1e-12,
            observations_per_parameter: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Gradient,
    RelativeLoss,
    /// No feasible step lowers the loss any further.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub reason: StopReason,
    pub iterations: usize,
    pub gradient_max_norm: f64,
    pub initial_loss: f64,
}

/// One row of the parameter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub lag: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    /// Two-sided normal-approximation p-value for `|t|`.
    pub approx_p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub order: ModelOrder,
    pub include_mean: bool,
    pub params: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub residuals: Series,
    pub sigma2: f64,
    pub n_effective: usize,
    pub loss: f64,
    pub initial_params: Vec<f64>,
    pub convergence: Convergence,
}

/// Serializable model summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub order: ModelOrder,
    pub include_mean: bool,
    pub coefficients: Vec<Coefficient>,
    pub sigma2: f64,
    pub loss: f64,
    pub n_effective: usize,
    pub convergence: Convergence,
}

impl FittedModel {
    pub fn arma_params(&self) -> ArmaParams {
        ArmaParams::from_vector(&self.order, &self.params, self.include_mean).expect("fitted vector matches order")
    }

    pub fn coefficients(&self) -> Vec<Coefficient> {
        self.order
            .param_names(self.include_mean)
            .into_iter()
            .enumerate()
            .map(|(i, (name, lag))| Coefficient {
                name,
                lag,
                estimate: self.params[i],
                std_error: self.std_errors[i],
                t_value: self.t_values[i],
                approx_p_value: 2.0 * normal_cdf(-self.t_values[i].abs()),
            })
            .collect()
    }

    /// Estimate of a named coefficient such as `ar1` or `sma1`.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.order
            .param_names(self.include_mean)
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| self.params[i])
    }

    pub fn report(&self) -> ModelReport {
        ModelReport {
            order: self.order,
            include_mean: self.include_mean,
            coefficients: self.coefficients(),
            sigma2: self.sigma2,
            loss: self.loss,
            n_effective: self.n_effective,
            convergence: self.convergence.clone(),
        }
    }
}

fn sum_sq(a: &[f64], valid: &[bool]) -> f64 {
    a.iter().zip(valid).filter(|(_, v)| **v).map(|(x, _)| x * x).sum()
}

fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    xtx.cholesky().map(|c| c.solve(&xty))
}

/// Pulls each polynomial factor toward zero until it is admissible.
fn shrink_to_admissible(mut p: ArmaParams) -> ArmaParams {
    for coefs in [&mut p.ar, &mut p.ma, &mut p.sar, &mut p.sma] {
        let mut tries = 0;
        while !super::poly::roots_outside_unit_circle(coefs, 1e-3) {
            coefs.iter_mut().for_each(|c| *c *= 0.9);
            tries += 1;
            if tries > 100 {
                coefs.iter_mut().for_each(|c| *c = 0.0);
            }
        }
    }
    p
}

/// Two-stage initializer: a long autoregression supplies a shock proxy, then
/// `w_t` is regressed on its own lags and lagged proxy shocks.
fn initial_guess(order: &ModelOrder, z: &[Option<f64>], include_mean: bool) -> ArmaParams {
    let observed: Vec<f64> = z.iter().flatten().copied().collect();
    let mu = if include_mean && !observed.is_empty() {
        observed.iter().sum::<f64>() / observed.len() as f64
    } else {
        0.0
    };
    // gaps become the mean, which is the neutral value for the regressions
    let w: Vec<f64> = z.iter().map(|v| v.map_or(0.0, |x| x - mu)).collect();
    let n = w.len();
    let s = order.period;
    let ar_lags: Vec<usize> = (1..=order.p).chain((1..=order.seasonal_p).map(|j| j * s)).collect();
    let ma_lags: Vec<usize> = (1..=order.q).chain((1..=order.seasonal_q).map(|j| j * s)).collect();
    let zeros = ArmaParams {
        ar: vec![0.0; order.p],
        ma: vec![0.0; order.q],
        sar: vec![0.0; order.seasonal_p],
        sma: vec![0.0; order.seasonal_q],
        mean: include_mean.then_some(mu),
    };

    // length of the long autoregression, also the burn-in of its shocks
    let burn = if ma_lags.is_empty() {
        0
    } else {
        (3 * (order.ar_span() + order.q + s * order.seasonal_q)).max(10).min(n / 4)
    };
    let proxy: Option<Vec<f64>> = if ma_lags.is_empty() {
        Some(vec![0.0; n])
    } else {
        let m = burn;
        (m > 0 && n > 2 * m + 1).then(|| {
            let rows = n - m;
            let x = DMatrix::from_fn(rows, m, |i, j| w[i + m - j - 1]);
            let y = DVector::from_iterator(rows, w[m..].iter().copied());
            let mut e = vec![0.0; n];
            if let Some(beta) = least_squares(&x, &y) {
                let fitted = &x * beta;
                for i in 0..rows {
                    e[i + m] = y[i] - fitted[i];
                }
            }
            e
        })
    };
    let Some(e) = proxy else { return zeros };

    let max_lag = ar_lags.iter().chain(&ma_lags).copied().max().unwrap_or(0);
    let first = burn + max_lag;
    let k = ar_lags.len() + ma_lags.len();
    if k == 0 || n <= first + k {
        return zeros;
    }
    let rows = n - first;
    let x = DMatrix::from_fn(rows, k, |i, j| {
        let t = i + first;
        if j < ar_lags.len() {
            w[t - ar_lags[j]]
        } else {
            e[t - ma_lags[j - ar_lags.len()]]
        }
    });
    let y = DVector::from_iterator(rows, w[first..].iter().copied());
    let Some(beta) = least_squares(&x, &y) else { return zeros };
    let mut it = beta.iter().copied();
    let mut guess = zeros.clone();
    for c in guess.ar.iter_mut().chain(guess.sar.iter_mut()) {
        *c = it.next().unwrap_or(0.0);
    }
    for c in guess.ma.iter_mut().chain(guess.sma.iter_mut()) {
        *c = -it.next().unwrap_or(0.0);
    }
    if guess.to_vector().iter().any(|v| !v.is_finite()) {
        return zeros;
    }
    shrink_to_admissible(guess)
}

/// Conditional least squares with default options.
pub fn fit(z: &Series, order: &ModelOrder, include_mean: bool) -> Result<FittedModel> {
    fit_with(z, order, include_mean, &FitOptions::default())
}

/// Conditional least squares on an already differenced series.
///
/// Damped Gauss-Newton on the residual vector: each step solves
/// `(J'J + lambda diag(J'J)) delta = -J'a`, halves the step until the
/// coefficients stay stationary and invertible, and accepts it only if the
/// loss falls.
pub fn fit_with(z: &Series, order: &ModelOrder, include_mean: bool, opts: &FitOptions) -> Result<FittedModel> {
    let k = order.param_count(include_mean);
    if k == 0 {
        return Err(ModelError::InvalidOrder("model has no parameters to estimate".into()));
    }
    let start = order.ar_span();
    if z.len() <= start {
        return Err(ModelError::TooShort { len: z.len(), needed: start });
    }
    let cells = z.cells();
    let s = order.period;
    let probe = ArmaParams::from_vector(order, &vec![0.0; k], include_mean)?;
    let (_, valid) = residual_path(&probe, cells, s);
    let n_eff = valid.iter().filter(|v| **v).count();
    if n_eff < opts.observations_per_parameter * k || n_eff <= k {
        return Err(ModelError::InsufficientData {
            needed: opts.observations_per_parameter * k,
            got: n_eff,
            params: k,
        });
    }

    let init = initial_guess(order, cells, include_mean);
    init.check_admissible()?;
    let mut params = init.to_vector();
    let initial_params = params.clone();

    let normal_system = |p: &ArmaParams| {
        let (a, valid, jac) = jacobian_dense(p, cells, s);
        let jt = jac.transpose();
        let av = DVector::from_iterator(a.len(), a.iter().zip(&valid).map(|(x, v)| if *v { *x } else { 0.0 }));
        let loss = sum_sq(&a, &valid);
        (jt.clone() * &jac, jt * av, loss)
    };

    let (mut jtj, mut grad_half, mut loss) = normal_system(&init);
    let initial_loss = loss;
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let reason = loop {
        let gmax = 2.0 * grad_half.amax();
        if gmax < opts.gradient_tolerance {
            break StopReason::Gradient;
        }
        if iterations >= opts.max_iterations {
            return Err(ModelError::NoConvergence {
                iterations,
                loss,
                gradient: gmax,
                params,
            });
        }
        iterations += 1;
        if lambda > 1e16 {
            break StopReason::Stalled;
        }
        let mut damped = jtj.clone();
        for i in 0..k {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
        }
        let Some(chol) = damped.cholesky() else {
            lambda *= 10.0;
            continue;
        };
        let mut step = chol.solve(&(-&grad_half));
        let mut candidate = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
            let tp = ArmaParams::from_vector(order, &trial, include_mean)?;
            if tp.is_admissible() {
                candidate = Some(tp);
                break;
            }
            step *= 0.5;
        }
        let Some(cand) = candidate else {
            lambda *= 10.0;
            continue;
        };
        let (a, valid) = residual_path(&cand, cells, s);
        let new_loss = sum_sq(&a, &valid);
        if new_loss.is_finite() && new_loss < loss {
            let rel = (loss - new_loss) / loss.max(f64::MIN_POSITIVE);
            params = cand.to_vector();
            (jtj, grad_half, loss) = normal_system(&cand);
            lambda = (lambda / 10.0).max(1e-12);
            if rel < opts.relative_loss_tolerance {
                break StopReason::RelativeLoss;
            }
        } else {
            lambda *= 10.0;
        }
    };

    let fitted = ArmaParams::from_vector(order, &params, include_mean)?;
    fitted.check_admissible()?;
    let sigma2 = loss / (n_eff - k) as f64;
    let inv = jtj.clone().try_inverse().ok_or(ModelError::Singular)?;
    let std_errors: Vec<f64> = (0..k).map(|i| (sigma2 * inv[(i, i)]).max(0.0).sqrt()).collect();
    if std_errors.iter().any(|v| !v.is_finite() || *v == 0.0) {
        return Err(ModelError::Singular);
    }
    let t_values = params.iter().zip(&std_errors).map(|(p, se)| p / se).collect();
    let residuals = super::css_residuals(&params, z, order, include_mean)?;
    Ok(FittedModel {
        order: *order,
        include_mean,
        params,
        std_errors,
        t_values,
        residuals,
        sigma2,
        n_effective: n_eff,
        loss,
        initial_params,
        convergence: Convergence {
            reason,
            iterations,
            gradient_max_norm: 2.0 * grad_half.amax(),
            initial_loss,
        },
    })
}
