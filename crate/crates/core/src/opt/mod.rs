//! Fitting the correction networks: trusted data, the loss, adjoint and
//! finite-difference gradients, training and evaluation.

pub mod adjoint;
pub mod data;
pub mod evaluate;
pub mod fd;
pub mod loss;
pub mod train;

pub use adjoint::{continuous_adjoint, discrete_adjoint, AdjointResult, CoefficientCotangents};
pub use data::{Provenance, SamplingMode, TrustedData};
pub use evaluate::{evaluate, ErrorTable};
pub use fd::{gradient_fd, max_relative_error};
pub use loss::{loss_and_cotangents, per_step_errors, relative_l2_loss};
pub use train::{train, CorrectionNets, CorrectionProblem, GradMode, NetCoefficients, TrainingConfig, TrainingReport};
