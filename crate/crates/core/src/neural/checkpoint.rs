//! Parameter checkpoints: raw little-endian f64 plus a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub widths: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
    pub seed: u64,
    pub param_count: usize,
}

/// Sidecar path: `net.bin` -> `net.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn save_checkpoint(net: &Mlp, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let bytes: Vec<u8> = net.params().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta = CheckpointMeta {
        widths: net.widths().to_vec(),
        hidden: net.hidden(),
        output: net.output_activation(),
        seed: net.seed(),
        param_count: net.param_count(),
    };
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Json { path: side.clone(), source: e })?;
    fs::write(&side, text + "\n").map_err(|e| Error::io(side, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Mlp> {
    let side = sidecar_path(path);
    let meta: CheckpointMeta =
        serde_json::from_slice(&read(&side)?).map_err(|e| Error::Json { path: side.clone(), source: e })?;
    let bytes = read(path)?;
    if bytes.len() != 8 * meta.param_count {
        return Err(Error::Dimension(format!(
            "{}: {} bytes for {} parameters",
            path.display(),
            bytes.len(),
            meta.param_count
        )));
    }
    let params: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("parameters in {}", path.display())));
    }
    Mlp::from_params(&meta.widths, meta.hidden, meta.output, meta.seed, params)
}
