//! The learned correction: two networks feeding the second continuum, and
//! the loop that fits them to trusted data.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::adjoint::{continuous_adjoint, discrete_adjoint, CoefficientCotangents};
use super::data::{SamplingMode, TrustedData};
use super::fd::gradient_fd;
use super::loss::relative_l2_loss;
use crate::fem::{DualModel, DualSolution, Schedule};
use crate::field::Tensor2;
use crate::neural::{input_batch, kappa_cotangent, kappa_from_outputs, sigma_from_outputs, AdamConfig, AdamState, Mlp, NetSpec, Tape};
use crate::{Error, Result};

/// Consecutive failed epochs tolerated before training gives up.
pub const MAX_CONSECUTIVE_FAILURES: usize = 10;

/// How the loss gradient is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GradMode {
    #[default]
    Discrete,
    Continuous,
    #[serde(alias = "fd")]
    FiniteDifference,
}

impl std::str::FromStr for GradMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(GradMode::Discrete),
            "continuous" => Ok(GradMode::Continuous),
            "fd" | "finite-difference" => Ok(GradMode::FiniteDifference),
            other => Err(Error::Config(format!("unknown gradient mode {other:?} (expected discrete, continuous or fd)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grad_mode: GradMode,
    #[serde(default)]
    pub sampling: SamplingMode,
    /// Save networks every this many epochs; 0 disables.
    #[serde(default)]
    pub checkpoint_every: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_fd_step() -> f64 {
    1e-6
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            adam: AdamConfig::default(),
            seed: 0,
            grad_mode: GradMode::Discrete,
            sampling: SamplingMode::Full,
            checkpoint_every: 0,
            fd_step: default_fd_step(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.adam.lr)));
        }
        if let SamplingMode::SpatialRatio { ratio } = self.sampling {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(Error::Config(format!("sampling ratio must be in (0, 1], got {ratio}")));
            }
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Config("fd_step must be positive".into()));
        }
        Ok(())
    }
}

/// The permeability network and the transfer-coefficient network.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionNets {
    pub kappa: Mlp,
    pub sigma: Mlp,
}

impl CorrectionNets {
    pub fn new(kappa: &NetSpec, sigma: &NetSpec) -> Result<Self> {
        Ok(Self { kappa: kappa.build()?, sigma: sigma.build()? })
    }

    pub fn param_count(&self) -> usize {
        self.kappa.param_count() + self.sigma.param_count()
    }

    /// Parameters of both networks, kappa first.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.kappa.params().to_vec();
        p.extend_from_slice(self.sigma.params());
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Dimension(format!("{} parameters for networks of {}", params.len(), self.param_count())));
        }
        let k = self.kappa.param_count();
        self.kappa.set_params(&params[..k])?;
        self.sigma.set_params(&params[k..])
    }

    fn with_params(&self, params: &[f64]) -> Result<Self> {
        let mut n = self.clone();
        n.set_params(params)?;
        Ok(n)
    }
}

/// Coefficients produced by the networks, with the tapes needed to pull
/// cotangents back.
pub struct NetCoefficients {
    pub kappa2: Schedule<Vec<Tensor2>>,
    pub sigma: Schedule<Vec<f64>>,
    kappa_tape: Tape,
    sigma_tape: Tape,
}

/// A coarse two-continuum model whose second continuum comes from networks.
///
/// Time-independent networks see `(x, y)` at every node; time-dependent
/// ones see `(x, y, t_n)` and are evaluated for all steps in one batch.
#[derive(Debug, Clone)]
pub struct CorrectionProblem {
    model: DualModel,
    inputs: Array2<f64>,
    time_dependent: bool,
}

impl CorrectionProblem {
    pub fn new(model: DualModel, time_dependent: bool) -> Self {
        let points = model.grid().node_points();
        let inputs = if time_dependent {
            let blocks: Vec<Array2<f64>> =
                (1..=model.steps()).map(|n| input_batch(&points, Some(model.settings().stepping.time(n)))).collect();
            let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
            ndarray::concatenate(ndarray::Axis(0), &views).expect("equal widths")
        } else {
            input_batch(&points, None)
        };
        Self { model, inputs, time_dependent }
    }

    pub fn model(&self) -> &DualModel {
        &self.model
    }

    pub fn time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    fn check_nets(&self, nets: &CorrectionNets) -> Result<()> {
        for (name, net) in [("kappa", &nets.kappa), ("sigma", &nets.sigma)] {
            if net.input_dim() != self.input_dim() {
                return Err(Error::Dimension(format!(
                    "{name} network takes {} inputs, problem provides {}",
                    net.input_dim(),
                    self.input_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn coefficients(&self, nets: &CorrectionNets) -> Result<NetCoefficients> {
        self.check_nets(nets)?;
        let kappa_tape = nets.kappa.forward_tape(&self.inputs)?;
        let sigma_tape = nets.sigma.forward_tape(&self.inputs)?;
        let (k, _) = kappa_from_outputs(kappa_tape.output())?;
        let s = sigma_from_outputs(sigma_tape.output())?;
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("transfer coefficient at row {i}")));
        }
        let (kappa2, sigma) = if self.time_dependent {
            let nodes = self.model.grid().node_count();
            (
                Schedule::Steps(k.chunks(nodes).map(<[Tensor2]>::to_vec).collect()),
                Schedule::Steps(s.chunks(nodes).map(<[f64]>::to_vec).collect()),
            )
        } else {
            (Schedule::Constant(k), Schedule::Constant(s))
        };
        Ok(NetCoefficients { kappa2, sigma, kappa_tape, sigma_tape })
    }

    pub fn solve(&self, nets: &CorrectionNets) -> Result<DualSolution> {
        let c = self.coefficients(nets)?;
        self.model.solve(&c.kappa2, &c.sigma)
    }

    pub fn loss(&self, nets: &CorrectionNets, data: &TrustedData) -> Result<f64> {
        let sol = self.solve(nets)?;
        relative_l2_loss(self.model.mass(), sol.trajectory.u1_steps(), data)
    }

    /// Pull nodal coefficient cotangents back to network parameters.
    fn pullback(&self, nets: &CorrectionNets, c: &NetCoefficients, cot: &CoefficientCotangents) -> Result<Vec<f64>> {
        let (dk, ds): (Vec<[f64; 3]>, Vec<f64>) = if self.time_dependent {
            (cot.kappa2.concat(), cot.sigma.concat())
        } else {
            cot.summed()
        };
        let kc = kappa_cotangent(c.kappa_tape.output(), &dk);
        let sc = Array2::from_shape_vec((ds.len(), 1), ds).expect("column");
        let mut g = nets.kappa.vjp(&c.kappa_tape, &kc)?;
        g.extend(nets.sigma.vjp(&c.sigma_tape, &sc)?);
        Ok(g)
    }

    /// Loss at the current parameters and its gradient in the given mode.
    pub fn loss_and_gradient(&self, nets: &CorrectionNets, data: &TrustedData, mode: GradMode, fd_step: f64) -> Result<(f64, Vec<f64>)> {
        let c = self.coefficients(nets)?;
        let sol = self.model.solve(&c.kappa2, &c.sigma)?;
        let traj = &sol.trajectory;
        match mode {
            GradMode::Discrete => {
                let r = discrete_adjoint(&self.model, &c.kappa2, &c.sigma, traj, data)?;
                Ok((r.loss, self.pullback(nets, &c, &r.cotangents)?))
            }
            GradMode::Continuous => {
                let r = continuous_adjoint(&self.model, &c.kappa2, &c.sigma, traj, data)?;
                Ok((r.loss, self.pullback(nets, &c, &r.cotangents)?))
            }
            GradMode::FiniteDifference => {
                let loss = relative_l2_loss(self.model.mass(), traj.u1_steps(), data)?;
                let g = gradient_fd(|p| self.loss(&nets.with_params(p)?, data), &nets.params(), fd_step)?;
                Ok((loss, g))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Loss before each update, one entry per epoch (NaN for failed epochs).
    pub history: Vec<f64>,
    pub skipped: usize,
}

/// Failures that a later epoch might recover from.
fn recoverable(e: &Error) -> bool {
    match e {
        Error::Step { source, .. } => recoverable(source),
        Error::NonFinite(_) | Error::SolverFailure { .. } | Error::Singular { .. } | Error::Newton { .. } => true,
        _ => false,
    }
}

/// Adam on the network parameters for `config.epochs` epochs against
/// `data` subsampled per `config.sampling`.
///
/// `on_epoch(epoch, loss, nets)` runs after every successful update, with
/// the networks already updated.
pub fn train(
    problem: &CorrectionProblem,
    nets: &mut CorrectionNets,
    data: &TrustedData,
    config: &TrainingConfig,
    mut on_epoch: impl FnMut(usize, f64, &CorrectionNets) -> Result<()>,
) -> Result<TrainingReport> {
    config.validate()?;
    let data = data.sample(config.sampling, config.seed)?;
    let mut adam = AdamState::new(config.adam, nets.param_count());
    let mut params = nets.params();
    let mut history = Vec::with_capacity(config.epochs);
    let mut skipped = 0;
    let mut failures = 0;
    for epoch in 1..=config.epochs {
        let step = problem
            .loss_and_gradient(nets, &data, config.grad_mode, config.fd_step)
            .and_then(|(loss, g)| {
                if !loss.is_finite() {
                    return Err(Error::NonFinite("loss".into()));
                }
                adam.step(&mut params, &g)?;
                Ok(loss)
            });
        match step {
            Ok(loss) => {
                failures = 0;
                nets.set_params(&params)?;
                history.push(loss);
                on_epoch(epoch, loss, nets)?;
            }
            Err(e) if recoverable(&e) => {
                log::warn!("epoch {epoch}: skipping update ({e})");
                history.push(f64::NAN);
                skipped += 1;
                failures += 1;
                if failures >= MAX_CONSECUTIVE_FAILURES {
                    return Err(Error::TrainingDiverged(failures));
                }
            }
            Err(e) => return Err(e),
        }
        if epoch % 1000 == 0 {
            log::info!("epoch {epoch}: loss {:.6e}", history[epoch - 1]);
        }
    }
    Ok(TrainingReport { history, skipped })
}
