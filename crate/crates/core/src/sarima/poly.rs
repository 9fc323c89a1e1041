//! Lag polynomials stored as coefficient vectors `c[0] + c[1] B + c[2] B^2 + ...`.

use nalgebra::DMatrix;

/// Root-modulus margin used by the stationarity and invertibility checks.
pub const ROOT_MARGIN: f64 = 1e-6;

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `1 - c_1 B^step - c_2 B^(2 step) - ...`
pub fn factor(coefs: &[f64], step: usize) -> Vec<f64> {
    let mut out = vec![0.0; coefs.len() * step + 1];
    out[0] = 1.0;
    for (i, c) in coefs.iter().enumerate() {
        out[(i + 1) * step] = -c;
    }
    out
}

/// `(1 - B)^d (1 - B^s)^D`.
pub fn differencing(d: usize, seasonal_d: usize, s: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..d {
        out = mul(&out, &[1.0, -1.0]);
    }
    for _ in 0..seasonal_d {
        out = mul(&out, &factor(&[1.0], s));
    }
    out
}

/// Whether every root of `1 - c_1 x - ... - c_p x^p` has modulus above
/// `1 + margin`.
pub fn roots_outside_unit_circle(coefs: &[f64], margin: f64) -> bool {
    let p = match coefs.iter().rposition(|c| *c != 0.0) {
        None => return true,
        Some(i) => i + 1,
    };
    if coefs[..p].iter().any(|c| !c.is_finite()) {
        return false;
    }
    let limit = 1.0 / (1.0 + margin);
    if p == 1 {
        return coefs[0].abs() < limit;
    }
    // eigenvalues of the companion matrix are the inverse roots
    let companion = DMatrix::from_fn(p, p, |i, j| {
        if i == 0 {
            coefs[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .all(|z| z.norm() < limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplies_factors() {
        // (1 - 0.5B)(1 - 0.8B^2) = 1 - 0.5B - 0.8B^2 + 0.4B^3
        let p = mul(&factor(&[0.5], 1), &factor(&[0.8], 2));
        assert_eq!(p, vec![1.0, -0.5, -0.8, 0.4]);
    }

    #[test]
    fn differencing_polynomial() {
        assert_eq!(differencing(1, 0, 12), vec![1.0, -1.0]);
        let p = differencing(1, 1, 4);
        assert_eq!(p, vec![1.0, -1.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(differencing(0, 0, 12), vec![1.0]);
    }

    #[test]
    fn stationarity_checks() {
        assert!(roots_outside_unit_circle(&[], ROOT_MARGIN));
        assert!(roots_outside_unit_circle(&[0.9], ROOT_MARGIN));
        assert!(!roots_outside_unit_circle(&[1.0], ROOT_MARGIN));
        assert!(!roots_outside_unit_circle(&[-1.2], ROOT_MARGIN));
        // AR(2) triangle: phi1 + phi2 < 1, phi2 - phi1 < 1, |phi2| < 1
        assert!(roots_outside_unit_circle(&[0.5, 0.3], ROOT_MARGIN));
        assert!(!roots_outside_unit_circle(&[0.7, 0.4], ROOT_MARGIN));
        assert!(!roots_outside_unit_circle(&[0.2, -1.05], ROOT_MARGIN));
        assert!(roots_outside_unit_circle(&[1.2, -0.5], ROOT_MARGIN));
        assert!(!roots_outside_unit_circle(&[0.5, f64::NAN], ROOT_MARGIN));
    }
}
