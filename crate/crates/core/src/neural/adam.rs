//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: default_beta1(), beta2: default_beta2(), eps: default_eps() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Self { config, m: vec![0.0; len], v: vec![0.0; len], step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of `theta` in place. Non-finite gradients are rejected
    /// without touching the state.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<()> {
        if theta.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::Dimension(format!(
                "adam state of {} for {} parameters and {} gradients",
                self.m.len(),
                theta.len(),
                grad.len()
            )));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient component {i}")));
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.step += 1;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for i in 0..theta.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            theta[i] -= lr * mh / (vh.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = AdamState::new(AdamConfig::default(), 3);
        let mut th = vec![1.0, -2.0, 0.5];
        s.step(&mut th, &[0.0; 3]).unwrap();
        assert_eq!(th, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn first_step_is_learning_rate() {
        let mut s = AdamState::new(AdamConfig::default(), 1);
        let mut th = vec![0.0];
        s.step(&mut th, &[1.0]).unwrap();
        assert!((th[0] + 1e-4 / (1.0 + 1e-8)).abs() < 1e-18);
    }

    #[test]
    fn constant_gradient_moves_at_learning_rate() {
        // with g constant, m_hat = g and v_hat = g^2, so every step is lr * g / (|g| + eps)
        let mut s = AdamState::new(AdamConfig { lr: 1e-3, ..Default::default() }, 2);
        let mut th = vec![0.0, 0.0];
        let mut prev = th.clone();
        for _ in 0..500 {
            s.step(&mut th, &[3.0, -0.5]).unwrap();
            assert!(((prev[0] - th[0]) - 1e-3).abs() < 1e-10);
            assert!(((th[1] - prev[1]) - 1e-3).abs() < 1e-10);
            prev = th.clone();
        }
    }

    #[test]
    fn rejects_non_finite_and_shape() {
        let mut s = AdamState::new(AdamConfig::default(), 2);
        let mut th = vec![0.0, 0.0];
        assert!(s.step(&mut th, &[f64::NAN, 0.0]).is_err());
        assert_eq!(s.step_count(), 0);
        assert!(s.step(&mut th, &[1.0]).is_err());
    }
}
