//! The run manifest: a JSON record of every command's config snapshot,
//! input/output digests, seeds, tool version, and timestamps. `atm
//! verify` recomputes the digests and fails on any mismatch.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::io_utils::{atomic_write, sha256_hex};

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub command: String,
    pub timestamp_unix: u64,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn digest_of(path: &Path) -> Result<FileDigest> {
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(path)?,
    })
}

fn load_or_new(path: &Path) -> Result<Manifest> {
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))
    } else {
        Ok(Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            entries: Vec::new(),
        })
    }
}

/// Appends one entry and writes the manifest back atomically.
pub fn append_entry(
    manifest_path: &Path,
    command: &str,
    seeds: Vec<u64>,
    config: serde_json::Value,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<()> {
    let mut manifest = load_or_new(manifest_path)?;
    let entry = ManifestEntry {
        command: command.to_string(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seeds,
        config,
        inputs: inputs.iter().map(|p| digest_of(p)).collect::<Result<_>>()?,
        outputs: outputs.iter().map(|p| digest_of(p)).collect::<Result<_>>()?,
    };
    manifest.entries.push(entry);
    let text = serde_json::to_string_pretty(&manifest)?;
    atomic_write(manifest_path, text.as_bytes())
}

/// Recomputes every recorded digest. Missing files and digest mismatches
/// are both failures.
pub fn verify(manifest_path: &Path) -> Result<(usize, usize)> {
    let manifest = load_or_new(manifest_path)?;
    if manifest.entries.is_empty() {
        bail!("manifest {} has no entries", manifest_path.display());
    }
    let mut checked = 0usize;
    let mut problems = Vec::new();
    for entry in &manifest.entries {
        for digest in entry.inputs.iter().chain(&entry.outputs) {
            checked += 1;
            match sha256_hex(&digest.path) {
                Ok(actual) if actual == digest.sha256 => {}
                Ok(actual) => problems.push(format!(
                    "{} (recorded by `{}`): digest {} != recorded {}",
                    digest.path.display(),
                    entry.command,
                    &actual[..12],
                    &digest.sha256[..12]
                )),
                Err(e) => problems.push(format!("{}: {e:#}", digest.path.display())),
            }
        }
    }
    if !problems.is_empty() {
        bail!("digest verification failed:\n  {}", problems.join("\n  "));
    }
    Ok((manifest.entries.len(), checked))
}
