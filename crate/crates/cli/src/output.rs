//! Result persistence: atomic file writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::hex;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    /// Declared CSV header; empty for JSON and text files.
    pub columns: Vec<String>,
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl OutputDir {
    /// Creates `root` if needed and checks that it is writable.
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        tempfile::NamedTempFile::new_in(root)
            .with_context(|| format!("output directory {} is not writable", root.display()))?;
        Ok(Self { root: root.to_path_buf(), artifacts: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    /// Writes through a temporary file in the same directory and renames it
    /// into place.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8], columns: &[&str]) -> Result<()> {
        write_atomic(&self.root.join(name), bytes)?;
        let artifact = Artifact {
            file: name.to_string(),
            sha256: hex(&Sha256::digest(bytes)),
            columns: columns.iter().map(|c| c.to_string()).collect(),
        };
        self.artifacts.retain(|a| a.file != name);
        self.artifacts.push(artifact);
        Ok(())
    }

    /// Renders a CSV with `render` and checks its header against `columns`.
    pub fn write_csv<F>(&mut self, name: &str, columns: &[&str], render: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> kuramoto_graphon::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        let header = buf.split(|&b| b == b'\n').next().unwrap_or_default();
        let expected = columns.join(",");
        anyhow::ensure!(header == expected.as_bytes(), "{name}: header does not match declared columns {expected}");
        self.write_bytes(name, &buf, columns)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes, &[])
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskFailure {
    pub index: usize,
    pub task: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub kgraphon: &'static str,
    pub kuramoto_graphon: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self { kgraphon: env!("CARGO_PKG_VERSION"), kuramoto_graphon: kuramoto_graphon::VERSION }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub versions: Versions,
    pub master_seed: u64,
    pub workers: usize,
    pub wall_time_s: f64,
    pub status: &'static str,
    pub failures: Vec<TaskFailure>,
    pub artifacts: Vec<Artifact>,
    pub results: serde_json::Value,
}
