//! Experiment configuration: one JSON document with sections
//! `{grid, time, field, physics, networks, training, output}`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fem::{load_from_fn, point_load, NewtonSettings, Nonlinearity, SolverSettings, TimeStepping};
use crate::field::ChannelSpec;
use crate::grid::StructuredGrid;
use crate::linalg::SolverKind;
use crate::neural::NetSpec;
use crate::opt::{GradMode, TrainingConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    /// Fine cells per coarse cell in each direction.
    pub refinement: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub final_time: f64,
    pub tau: f64,
}

/// The fine permeability: a channel spec file (relative to the config) or
/// an inline spec. Loading resolves the file into `channel`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSpec>,
}

/// One additive piece of the (time-independent) source term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SourceTerm {
    Constant { value: f64 },
    Gaussian { x: f64, y: f64, width: f64, amplitude: f64 },
    /// Indicator of an axis-aligned rectangle times `value`.
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64, value: f64 },
    /// Point load `amplitude * delta(x - p)`.
    Point { x: f64, y: f64, amplitude: f64 },
}

impl SourceTerm {
    fn value_at(&self, x: f64, y: f64) -> f64 {
        match *self {
            SourceTerm::Constant { value } => value,
            SourceTerm::Gaussian { x: cx, y: cy, width, amplitude } => {
                amplitude * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * width * width)).exp()
            }
            SourceTerm::Rectangle { x0, y0, x1, y1, value } => {
                if x >= x0 && x <= x1 && y >= y0 && y <= y1 {
                    value
                } else {
                    0.0
                }
            }
            SourceTerm::Point { .. } => 0.0,
        }
    }
}

/// Integrated load vector of a summed source on `grid`.
pub fn load_vector(terms: &[SourceTerm], grid: &StructuredGrid) -> Result<Vec<f64>> {
    let mut f = load_from_fn(grid, |x, y| terms.iter().map(|t| t.value_at(x, y)).sum());
    for t in terms {
        if let SourceTerm::Point { x, y, amplitude } = *t {
            for (a, b) in f.iter_mut().zip(point_load(grid, x, y, amplitude)?) {
                *a += b;
            }
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    pub source: Vec<SourceTerm>,
    #[serde(default)]
    pub newton: NewtonSettings,
    #[serde(default)]
    pub linear_solver: SolverKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworksSection {
    pub hidden: usize,
    pub depth: usize,
    /// Seeds default to the training seed and the training seed + 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub time: TimeSection,
    pub field: FieldSection,
    pub physics: PhysicsSection,
    pub networks: NetworksSection,
    pub training: TrainingConfig,
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Parse, resolve the field spec file and validate.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })?;
        cfg.resolve(path.parent().unwrap_or(Path::new(".")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Json { path: PathBuf::from("<inline>"), source: e })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replace a spec path by its contents so the config is self-contained.
    fn resolve(&mut self, base: &Path) -> Result<()> {
        if let Some(spec) = self.field.spec.take() {
            if self.field.channel.is_some() {
                return Err(Error::Config("field: give either spec or channel, not both".into()));
            }
            let p = if spec.is_absolute() { spec } else { base.join(spec) };
            if !p.exists() {
                return Err(Error::MissingInput(p));
            }
            let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            self.field.channel = Some(serde_json::from_str(&text).map_err(|e| Error::Json { path: p.clone(), source: e })?);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.nx == 0 || g.ny == 0 || g.refinement == 0 {
            return Err(Error::Config("grid sizes and refinement must be positive".into()));
        }
        self.stepping()?;
        match &self.field.channel {
            Some(c) => c.validate().map_err(|e| Error::Config(format!("field: {e}")))?,
            None => return Err(Error::Config("field: no channel spec given".into())),
        }
        if let Nonlinearity::Exponential { beta } = self.physics.nonlinearity {
            if !(beta >= 0.0 && beta.is_finite()) {
                return Err(Error::Config(format!("beta must be >= 0, got {beta}")));
            }
        }
        if self.physics.source.is_empty() {
            return Err(Error::Config("physics: empty source".into()));
        }
        if self.networks.hidden == 0 {
            return Err(Error::Config("networks: hidden width must be positive".into()));
        }
        self.training.validate()?;
        if self.training.grad_mode == GradMode::Continuous && !self.physics.nonlinearity.is_linear() {
            return Err(Error::Config("the continuous adjoint supports only the linear model".into()));
        }
        Ok(())
    }

    pub fn channel(&self) -> &ChannelSpec {
        self.field.channel.as_ref().expect("validated config has a channel spec")
    }

    pub fn coarse_grid(&self) -> Result<StructuredGrid> {
        StructuredGrid::new(self.grid.nx, self.grid.ny)
    }

    pub fn fine_grid(&self) -> Result<StructuredGrid> {
        self.coarse_grid()?.refine(self.grid.refinement)
    }

    pub fn stepping(&self) -> Result<TimeStepping> {
        TimeStepping::from_final_time(self.time.final_time, self.time.tau).map_err(|e| Error::Config(format!("time: {e}")))
    }

    pub fn solver_settings(&self) -> Result<SolverSettings> {
        let s = self.stepping()?;
        let mut settings = SolverSettings::linear(s.tau, s.steps)?
            .with_nonlinearity(self.physics.nonlinearity)
            .with_linear_solver(self.physics.linear_solver);
        settings.newton = self.physics.newton;
        Ok(settings)
    }

    /// Network inputs: `(x, y)` for the linear model, `(x, y, t)` otherwise.
    pub fn net_input_dim(&self) -> usize {
        if self.physics.nonlinearity.is_linear() {
            2
        } else {
            3
        }
    }

    pub fn net_specs(&self) -> (NetSpec, NetSpec) {
        let n = &self.networks;
        let seed = self.training.seed;
        let d = self.net_input_dim();
        (
            NetSpec::kappa(d, n.hidden, n.depth, n.kappa_seed.unwrap_or(seed)),
            NetSpec::sigma(d, n.hidden, n.depth, n.sigma_seed.unwrap_or(seed.wrapping_add(1))),
        )
    }

    /// Apply command-line overrides. A seed override replaces every seed.
    pub fn apply_overrides(&mut self, seed: Option<u64>, grad_mode: Option<GradMode>) -> Result<()> {
        if let Some(s) = seed {
            self.training.seed = s;
            self.networks.kappa_seed = None;
            self.networks.sigma_seed = None;
        }
        if let Some(m) = grad_mode {
            self.training.grad_mode = m;
        }
        self.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
