//! Mass-weighted relative L2 mismatch between the first continuum and the data.

use super::data::TrustedData;
use crate::linalg::sparse::dot;
use crate::linalg::SparseMatrix;
use crate::{Error, Result};

fn masked(v: &[f64], m: &[bool]) -> Vec<f64> {
    v.iter().zip(m).map(|(&x, &k)| if k { x } else { 0.0 }).collect()
}

fn check(mass: &SparseMatrix, u1: &[Vec<f64>], data: &TrustedData) -> Result<()> {
    if u1.len() != data.steps() {
        return Err(Error::Dimension(format!("{} solution steps against {} data steps", u1.len(), data.steps())));
    }
    if u1.iter().any(|u| u.len() != mass.dim()) {
        return Err(Error::Dimension("solution length differs from the mass matrix".into()));
    }
    Ok(())
}

/// `sum_n (m U_n)^T M (m U_n)`, the normalizer of the loss.
pub fn denominator(mass: &SparseMatrix, data: &TrustedData) -> f64 {
    (1..=data.steps())
        .map(|n| {
            let mu = masked(data.values(n), data.mask(n));
            dot(&mu, &mass.matvec(&mu))
        })
        .sum()
}

/// `100 * sum_n e_n^T M e_n / sum_n (m U_n)^T M (m U_n)` with `e_n = m (u_n - U_n)`.
pub fn relative_l2_loss(mass: &SparseMatrix, u1: &[Vec<f64>], data: &TrustedData) -> Result<f64> {
    Ok(loss_and_cotangents(mass, u1, data)?.0)
}

/// Loss together with `dL/du_n` for every step.
pub fn loss_and_cotangents(mass: &SparseMatrix, u1: &[Vec<f64>], data: &TrustedData) -> Result<(f64, Vec<Vec<f64>>)> {
    check(mass, u1, data)?;
    let den = denominator(mass, data);
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    let mut num = 0.0;
    let mut cot = Vec::with_capacity(u1.len());
    for (k, u) in u1.iter().enumerate() {
        let n = k + 1;
        let m = data.mask(n);
        let e: Vec<f64> = (0..u.len()).map(|i| if m[i] { u[i] - data.values(n)[i] } else { 0.0 }).collect();
        let me = mass.matvec(&e);
        num += dot(&e, &me);
        cot.push(me.iter().zip(m).map(|(&v, &k)| if k { 200.0 * v / den } else { 0.0 }).collect());
    }
    Ok((100.0 * num / den, cot))
}

/// Relative error (percent) at each step separately.
pub fn per_step_errors(mass: &SparseMatrix, u1: &[Vec<f64>], data: &TrustedData) -> Result<Vec<f64>> {
    check(mass, u1, data)?;
    (1..=data.steps())
        .map(|n| {
            let m = data.mask(n);
            let mu = masked(data.values(n), m);
            let den = dot(&mu, &mass.matvec(&mu));
            if !(den > 0.0) {
                return Err(Error::ZeroDenominator);
            }
            let e: Vec<f64> = (0..mu.len()).map(|i| if m[i] { u1[n - 1][i] - mu[i] } else { 0.0 }).collect();
            Ok(100.0 * dot(&e, &mass.matvec(&e)) / den)
        })
        .collect()
}
