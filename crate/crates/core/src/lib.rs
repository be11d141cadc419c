//! Learned two-continuum correction of numerically homogenized flow models.
//!
//! The crate builds everything needed to take a high-contrast permeability
//! field, upscale it with local periodic cell problems, and then enrich the
//! resulting coarse (homogenized) parabolic model with a second continuum:
//!
//! ```text
//! M du1/dt + A1(k1*) u1 + sigma M (u1 - u2) = F
//! M du2/dt + A2(k2)  u2 + sigma M (u2 - u1) = 0
//! ```
//!
//! where `k2` and `sigma` are small multilayer perceptrons trained against
//! block-averaged fine-scale solutions. Gradients come from an exact discrete
//! adjoint of the backward-Euler time stepping, from the continuous adjoint
//! equation, or from central finite differences.
//!
//! Module map:
//!
//! - [`grid`]: uniform rectangular meshes on the unit square.
//! - [`field`]: cell and nodal fields, channelized permeability generator.
//! - [`io`]: CSV field format, time series, checkpoints.
//! - [`homogenize`]: cell problems, effective tensors, nodal interpolation.
//! - [`linalg`]: CSR matrices, Krylov solvers, banded LU.
//! - [`fem`]: Q1 assembly, dual-continuum stepping, fine reference solver.
//! - [`neural`]: dense networks with explicit vector-Jacobian products, Adam.
//! - [`opt`]: loss, adjoints, trusted-data sampling, training loop.
//! - [`experiment`]: JSON experiment configs, pipeline commands, manifests.

pub mod error;
pub mod experiment;
pub mod fem;
pub mod field;
pub mod grid;
pub mod homogenize;
pub mod io;
pub mod linalg;
pub mod neural;
pub mod opt;

pub use error::{Error, Result};
