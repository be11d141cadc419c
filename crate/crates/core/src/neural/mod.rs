//! Small dense networks with explicit reverse and forward products, and Adam.

pub mod adam;
pub mod checkpoint;
pub mod mlp;
pub mod nets;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use mlp::{param_count, Activation, Mlp, Tape};
pub use nets::{input_batch, kappa_cotangent, kappa_from_outputs, kappa_net_eval, sigma_from_outputs, NetSpec, KAPPA_FLOOR};
