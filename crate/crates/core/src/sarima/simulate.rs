use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{poly, ArmaParams, ModelError, ModelOrder, Result};
use crate::series::Series;

/// Seeded sample path of length `n`.
///
/// The ARMA part starts from a zero state and runs through a discarded burn-in
/// of `10 (s + p + q)` points; the mean is added and the result is integrated
/// `d` and `D` times from zero initial values.
pub fn simulate_sarima(order: &ModelOrder, params: &ArmaParams, sigma: f64, n: usize, seed: u64) -> Result<Series> {
    ArmaParams::from_vector(order, &params.to_vector(), params.mean.is_some())?;
    params.check_admissible()?;
    let noise = Normal::new(0.0, sigma).map_err(|e| ModelError::InvalidOrder(format!("sigma {sigma}: {e}")))?;
    let burn = 10 * (order.period + order.p + order.q);
    let total = burn + n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shocks: Vec<f64> = (0..total).map(|_| noise.sample(&mut rng)).collect();
    let ar = params.ar_polynomial(order.period);
    let ma = params.ma_polynomial(order.period);
    let mut w = vec![0.0; total];
    for t in 0..total {
        let mut v = shocks[t];
        for (k, m) in ma.iter().enumerate().skip(1).take(t) {
            v += m * shocks[t - k];
        }
        for (k, c) in ar.iter().enumerate().skip(1).take(t) {
            v -= c * w[t - k];
        }
        w[t] = v;
    }
    let mu = params.mean.unwrap_or(0.0);
    let diff = poly::differencing(order.d, order.seasonal_d, order.period);
    let mut y = vec![0.0; n];
    for t in 0..n {
        let mut v = w[burn + t] + mu;
        for (k, c) in diff.iter().enumerate().skip(1).take(t) {
            v -= c * y[t - k];
        }
        y[t] = v;
    }
    Ok(Series::from_values(&y))
}
