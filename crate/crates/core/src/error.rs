use std::path::PathBuf;

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing input: {0}")]
    MissingInput(PathBuf),

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("singular matrix: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("newton did not converge in {iterations} iterations, residual history {history:?}")]
    Newton { iterations: usize, history: Vec<f64> },

    #[error("coefficient is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("homogenization failed for block {block}: {source}")]
    Block {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("observation mask is empty")]
    EmptyMask,

    #[error("zero denominator in relative error")]
    ZeroDenominator,

    #[error("training aborted after {0} consecutive non-finite epochs")]
    TrainingDiverged(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("gradient check failed: max relative error {max_rel_err:.3e} exceeds {tolerance:.1e}")]
    GradientCheck { max_rel_err: f64, tolerance: f64 },

    #[error("replay differs from the manifest: {0}")]
    ReplayMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step { step, source: Box::new(self) }
    }

    /// Short stable tag used in machine-readable CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::Dimension(_) => "dimension",
            Error::NonFinite(_) => "non_finite",
            Error::InvalidInput(_) => "invalid_input",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::MissingInput(_) => "missing_input",
            Error::SolverFailure { .. } => "solver_failure",
            Error::Singular { .. } => "singular",
            Error::Step { source, .. } | Error::Block { source, .. } => source.kind(),
            Error::Newton { .. } => "newton_failure",
            Error::NotSpd(_) => "not_spd",
            Error::EmptyMask => "empty_mask",
            Error::ZeroDenominator => "zero_denominator",
            Error::TrainingDiverged(_) => "training_diverged",
            Error::Config(_) => "config",
            Error::GradientCheck { .. } => "gradient_check",
            Error::ReplayMismatch(_) => "replay_mismatch",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
