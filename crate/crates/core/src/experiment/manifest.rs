//! Run manifests: what a command read and wrote, with SHA-256 hashes, so a
//! run can be replayed and compared byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const MANIFEST_DIR: &str = "manifests";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub config_sha256: String,
    #[serde(default)]
    pub options: serde_json::Value,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub summary: serde_json::Value,
    pub wall_time_s: f64,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    Ok(sha256_bytes(&bytes))
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

/// Every file under `path` (or `path` itself), sorted.
pub fn collect_files(path: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> =
            fs::read_dir(path).map_err(|e| Error::io(path, e))?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>().map_err(|e| Error::io(path, e))?;
        entries.sort();
        for e in entries {
            out.extend(collect_files(&e)?);
        }
    } else if path.exists() {
        out.push(path.to_path_buf());
    } else {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    Ok(out)
}

pub fn records(root: &Path, paths: &[PathBuf]) -> Result<Vec<FileRecord>> {
    let mut out = Vec::new();
    for p in paths {
        for f in collect_files(p)? {
            out.push(FileRecord { path: relative(root, &f), sha256: sha256_file(&f)? });
        }
    }
    Ok(out)
}

pub fn manifest_path(out_dir: &Path, command: &str) -> PathBuf {
    out_dir.join(MANIFEST_DIR).join(format!("{command}.json"))
}

impl Manifest {
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = manifest_path(out_dir, &self.command);
        if let Some(d) = path.parent() {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Json { path: path.clone(), source: e })?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingInput(path.to_path_buf())
            } else {
                Error::io(path, e)
            }
        })?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })
    }

    /// Output directory the manifest was written into.
    pub fn output_dir(path: &Path) -> PathBuf {
        path.parent().and_then(Path::parent).map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_bytes(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn records_walk_directories_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        fs::create_dir_all(root.join("series")).unwrap();
        fs::write(root.join("series/b.csv"), "2").unwrap();
        fs::write(root.join("series/a.csv"), "1").unwrap();
        fs::write(root.join("top.csv"), "3").unwrap();
        let r = records(root, &[root.join("series"), root.join("top.csv")]).unwrap();
        let names: Vec<&str> = r.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(names, ["series/a.csv", "series/b.csv", "top.csv"]);
        assert!(matches!(records(root, &[root.join("missing")]), Err(Error::MissingInput(_))));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest {
            command: "eval".into(),
            version: "0.1.0".into(),
            config: serde_json::json!({"a": 1}),
            config_sha256: sha256_bytes(b"{}"),
            options: serde_json::Value::Null,
            inputs: vec![],
            outputs: vec![],
            summary: serde_json::json!({}),
            wall_time_s: 0.5,
        };
        let p = m.write(dir.path()).unwrap();
        assert_eq!(Manifest::read(&p).unwrap(), m);
        assert_eq!(Manifest::output_dir(&p), dir.path());
    }
}
