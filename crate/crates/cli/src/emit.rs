//! Artifact writing and the per-run manifest.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    /// File name relative to the output directory.
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        Self {
            name: name.into(),
            bytes: bytes.into(),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn json(name: impl Into<String>, value: &impl Serialize) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self::new(name, bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub scenario: serde_json::Value,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

/// Writes every artifact into `dir` (created if needed) and then
/// `manifest.json` listing them with their SHA-256.
pub fn emit_outputs(
    artifacts: &[Artifact],
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    scenario: serde_json::Value,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut files = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
        files.push(ManifestEntry {
            path: a.name.clone(),
            sha256: hex::encode(Sha256::digest(&a.bytes)),
            bytes: a.bytes.len(),
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        seed,
        scenario,
        files,
    };
    let m = Artifact::json(MANIFEST, &manifest)?;
    let path = dir.join(MANIFEST);
    std::fs::write(&path, &m.bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
