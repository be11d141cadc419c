//! Central finite differences, the reference every analytic gradient is
//! checked against.

use crate::{Error, Result};

/// `g_i = (L(theta + h e_i) - L(theta - h e_i)) / 2h` for every component.
pub fn gradient_fd(mut loss: impl FnMut(&[f64]) -> Result<f64>, theta: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {step}")));
    }
    let mut x = theta.to_vec();
    let mut g = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + step;
        let lp = loss(&x)?;
        x[i] = theta[i] - step;
        let lm = loss(&x)?;
        x[i] = theta[i];
        if !lp.is_finite() || !lm.is_finite() {
            return Err(Error::NonFinite(format!("loss around component {i}")));
        }
        g.push((lp - lm) / (2.0 * step));
    }
    Ok(g)
}

/// Largest `|a - b| / |b|` over components with `|b| > floor`.
pub fn max_relative_error(analytic: &[f64], reference: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .filter(|(_, r)| r.abs() > floor)
        .map(|(a, r)| (a - r).abs() / r.abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let theta = [0.3, -1.2, 4.0];
        let g = gradient_fd(|t| Ok(t.iter().map(|v| v * v).sum::<f64>() / 2.0), &theta, 1e-3).unwrap();
        for (a, b) in g.iter().zip(&theta) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn linear() {
        let c = [2.0, -0.5, 7.25];
        let g = gradient_fd(|t| Ok(t.iter().zip(&c).map(|(a, b)| a * b).sum()), &[1.0, 2.0, 3.0], 0.5).unwrap();
        for (a, b) in g.iter().zip(&c) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let r = gradient_fd(|t| Ok(if t[0] > 0.0 { f64::NAN } else { 0.0 }), &[0.0], 1e-3);
        assert!(matches!(r, Err(Error::NonFinite(_))));
        assert!(gradient_fd(|_| Ok(0.0), &[0.0], 0.0).is_err());
    }

    #[test]
    fn relative_error_skips_tiny_components() {
        assert_eq!(max_relative_error(&[1.0, 5.0], &[1.0, 1e-14], 1e-12), 0.0);
        assert!((max_relative_error(&[1.1], &[1.0], 0.0) - 0.1).abs() < 1e-12);
    }
}
