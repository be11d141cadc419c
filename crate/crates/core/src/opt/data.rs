//! Trusted data: reference values at coarse nodes plus an observation mask.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::StructuredGrid;
use crate::{Error, Result};

/// Where a data set came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub refinement: usize,
    pub field: String,
    pub solver: String,
    pub sampling: String,
}

/// How trusted data are subsampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum SamplingMode {
    #[default]
    Full,
    /// Keep steps with `t_n <= t_star`.
    TimePrefix { t_star: f64 },
    /// Keep `floor(ratio * node_count)` nodes, the same at every step.
    SpatialRatio { ratio: f64 },
}

impl SamplingMode {
    pub fn describe(&self) -> String {
        match self {
            SamplingMode::Full => "full".into(),
            SamplingMode::TimePrefix { t_star } => format!("time-prefix t*={t_star}"),
            SamplingMode::SpatialRatio { ratio } => format!("spatial-ratio p={ratio}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustedData {
    nx: usize,
    ny: usize,
    tau: f64,
    values: Vec<Vec<f64>>,
    mask: Vec<Vec<bool>>,
    pub provenance: Provenance,
}

impl TrustedData {
    /// Fully observed data at steps `1..=N`.
    pub fn new(grid: &StructuredGrid, tau: f64, values: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyMask);
        }
        for (n, v) in values.iter().enumerate() {
            if v.len() != grid.node_count() {
                return Err(Error::Dimension(format!("step {}: {} values for {} nodes", n + 1, v.len(), grid.node_count())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("trusted data at step {}", n + 1)));
            }
        }
        let mask = vec![vec![true; grid.node_count()]; values.len()];
        Ok(Self { nx: grid.nx(), ny: grid.ny(), tau, values, mask, provenance })
    }

    pub fn with_mask(mut self, mask: Vec<Vec<bool>>) -> Result<Self> {
        if mask.len() != self.values.len() || mask.iter().any(|m| m.len() != self.values[0].len()) {
            return Err(Error::Dimension("mask shape differs from data".into()));
        }
        if !mask.iter().flatten().any(|&b| b) {
            return Err(Error::EmptyMask);
        }
        self.mask = mask;
        Ok(self)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn matches(&self, grid: &StructuredGrid) -> bool {
        self.shape() == (grid.nx(), grid.ny())
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Values at step `n` (1-based).
    pub fn values(&self, n: usize) -> &[f64] {
        &self.values[n - 1]
    }

    pub fn all_values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn mask(&self, n: usize) -> &[bool] {
        &self.mask[n - 1]
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().flatten().filter(|&&b| b).count()
    }

    /// Steps with at least one observation.
    pub fn observed_steps(&self) -> Vec<usize> {
        (1..=self.steps()).filter(|&n| self.mask(n).iter().any(|&b| b)).collect()
    }

    /// Subsample the observation mask. Values are kept so held-out entries
    /// can still be evaluated.
    pub fn sample(&self, mode: SamplingMode, seed: u64) -> Result<TrustedData> {
        let nodes = self.values[0].len();
        let mask = match mode {
            SamplingMode::Full => self.mask.clone(),
            SamplingMode::TimePrefix { t_star } => (1..=self.steps())
                .map(|n| {
                    let keep = n as f64 * self.tau <= t_star * (1.0 + 1e-12);
                    self.mask(n).iter().map(|&m| m && keep).collect()
                })
                .collect(),
            SamplingMode::SpatialRatio { ratio } => {
                if !(ratio > 0.0 && ratio <= 1.0) {
                    return Err(Error::InvalidInput(format!("sampling ratio must be in (0, 1], got {ratio}")));
                }
                let count = (ratio * nodes as f64 + 1e-9).floor() as usize;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut keep = vec![false; nodes];
                for i in sample(&mut rng, nodes, count) {
                    keep[i] = true;
                }
                self.mask.iter().map(|m| m.iter().zip(&keep).map(|(&a, &b)| a && b).collect()).collect()
            }
        };
        let mut out = self.clone().with_mask(mask)?;
        out.provenance.sampling = mode.describe();
        Ok(out)
    }
}
