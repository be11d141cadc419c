//! Finite elements on structured grids: assembly, the dual-continuum
//! backward-Euler stepper, the single-continuum reference solver and
//! coarse-block averaging.

pub mod assembly;
pub mod average;
pub mod dual;
pub mod manufactured;
pub mod reference;

pub use assembly::{
    assemble_exponential, assemble_mass, load_from_fn, point_load, assemble_stiffness, assemble_stiffness_cells, restrict_interior,
    stiffness_sensitivity, to_full, to_interior, Q1Element, TensorSource,
};
pub use average::{block_means, coarse_average, coarse_average_series};
pub use dual::{solve_dual_linear, solve_dual_nonlinear, CoefficientFields, DualModel, DualSolution};
pub use reference::{solve_fine_reference, solve_single_continuum, SingleSolution};

use serde::{Deserialize, Serialize};

use crate::grid::StructuredGrid;
use crate::linalg::SolverKind;
use crate::{Error, Result};

/// A per-step quantity that may or may not change in time. Steps are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule<T> {
    Constant(T),
    Steps(Vec<T>),
}

impl<T> Schedule<T> {
    pub fn at(&self, step: usize) -> &T {
        match self {
            Schedule::Constant(v) => v,
            Schedule::Steps(v) => &v[step - 1],
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant(_))
    }

    pub(crate) fn check_len(&self, steps: usize, what: &str) -> Result<()> {
        match self {
            Schedule::Steps(v) if v.len() != steps => {
                Err(Error::Dimension(format!("{what}: {} entries for {steps} steps", v.len())))
            }
            _ => Ok(()),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Schedule<U> {
        match self {
            Schedule::Constant(v) => Schedule::Constant(f(v)),
            Schedule::Steps(v) => Schedule::Steps(v.iter().map(f).collect()),
        }
    }
}

/// Coefficient dependence on the first-continuum solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Nonlinearity {
    #[default]
    Linear,
    /// `kappa(x, u) = kappa(x) exp(beta u)`.
    Exponential { beta: f64 },
}

impl Nonlinearity {
    pub fn exponential(beta: f64) -> Self {
        Nonlinearity::Exponential { beta }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Nonlinearity::Linear)
    }
}

/// Uniform backward-Euler time stepping on `[0, steps * tau]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStepping {
    pub tau: f64,
    pub steps: usize,
}

impl TimeStepping {
    pub fn new(tau: f64, steps: usize) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive, got {tau}")));
        }
        Ok(Self { tau, steps })
    }

    /// From a final time that must be an integer multiple of `tau`.
    pub fn from_final_time(final_time: f64, tau: f64) -> Result<Self> {
        let ratio = final_time / tau;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidInput(format!("T/tau = {final_time}/{tau} is not a positive integer")));
        }
        Self::new(tau, steps as usize)
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.tau
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Newton iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 20 }
    }
}

impl NewtonSettings {
    /// Absolute residual test, or a residual already at rounding level
    /// relative to `scale`, the norm of `|A||u| + |b|`.
    pub fn converged(&self, residual: f64, scale: f64) -> bool {
        residual <= self.tol || residual <= 64.0 * f64::EPSILON * scale
    }
}

/// Everything that controls how a time-dependent problem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub stepping: TimeStepping,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    #[serde(default)]
    pub newton: NewtonSettings,
    #[serde(default)]
    pub linear: SolverKind,
}

impl SolverSettings {
    pub fn linear(tau: f64, steps: usize) -> Result<Self> {
        Ok(Self {
            stepping: TimeStepping::new(tau, steps)?,
            nonlinearity: Nonlinearity::Linear,
            newton: NewtonSettings::default(),
            linear: SolverKind::Direct,
        })
    }

    pub fn with_nonlinearity(mut self, nl: Nonlinearity) -> Self {
        self.nonlinearity = nl;
        self
    }
}

/// Nodal values of both continua at steps `1..=N` (the zero initial state
/// is implicit). Also used for adjoint states.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTrajectory {
    nx: usize,
    ny: usize,
    tau: f64,
    u1: Vec<Vec<f64>>,
    u2: Vec<Vec<f64>>,
}

impl DualTrajectory {
    /// Assemble from per-step full nodal vectors.
    pub fn from_parts(grid: &StructuredGrid, tau: f64, u1: Vec<Vec<f64>>, u2: Vec<Vec<f64>>) -> Self {
        assert_eq!(u1.len(), u2.len(), "continua must have equal step counts");
        debug_assert!(u1.iter().chain(&u2).all(|v| v.len() == grid.node_count()));
        Self { nx: grid.nx(), ny: grid.ny(), tau, u1, u2 }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn steps(&self) -> usize {
        self.u1.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn final_time(&self) -> f64 {
        self.tau * self.steps() as f64
    }

    /// First continuum at step `n` (1-based).
    pub fn u1(&self, n: usize) -> &[f64] {
        &self.u1[n - 1]
    }

    pub fn u2(&self, n: usize) -> &[f64] {
        &self.u2[n - 1]
    }

    pub fn u1_steps(&self) -> &[Vec<f64>] {
        &self.u1
    }

    pub fn u2_steps(&self) -> &[Vec<f64>] {
        &self.u2
    }
}
