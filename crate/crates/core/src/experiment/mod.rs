//! Reproducible experiments: configuration, the command pipeline and run
//! manifests.

pub mod config;
pub mod manifest;
pub mod pipeline;

pub use config::{load_vector, ExperimentConfig, SourceTerm};
pub use manifest::{FileRecord, Manifest};
pub use pipeline::{gradcheck, replay, run_command, run_pipeline, Command, GradcheckReport, Prepared, ReplayReport};
