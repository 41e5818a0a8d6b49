//! Run manifest and output-directory digests.
//!
//! Everything in the manifest except the `runtime` block is a function of the
//! config and the input bytes. `runtime` holds wall times, the worker count
//! and the output location, and is left out of [`output_digest`].

use std::collections::BTreeMap;
use std::path::Path;

use jobnet_core::text::sha256_hex;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Context};
use crate::stages::Run;

pub const MANIFEST: &str = "manifest.json";
const RUNTIME_KEY: &str = "runtime";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub classifier_split: u64,
    pub metadata_bootstrap: u64,
    pub polarization_bootstrap: u64,
    pub grid: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub output_dir: String,
    pub jobs: usize,
    pub stages: Vec<StageTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// The effective config without `output_dir`.
    pub config: serde_json::Value,
    pub inputs: Vec<InputFile>,
    pub stopwords_sha256: String,
    pub seeds: Seeds,
    /// SHA-256 of every other file in the output directory.
    pub outputs: BTreeMap<String, String>,
    pub runtime: Runtime,
}

impl RunManifest {
    pub fn build(run: &Run, timings: &[StageTiming]) -> Result<Self, CliError> {
        let cfg = run.config();
        let mut config = serde_json::to_value(cfg).context("serializing config")?;
        if let Some(map) = config.as_object_mut() {
            map.remove("output_dir");
        }
        let inputs = cfg
            .input_paths()
            .into_iter()
            .map(|p| {
                let bytes = std::fs::read(p).context(format!("cannot read {}", p.display()))?;
                Ok(InputFile {
                    path: p.display().to_string(),
                    sha256: sha256_hex(&bytes),
                    bytes: bytes.len() as u64,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut outputs = output_digest(&cfg.output_dir)?;
        outputs.remove(MANIFEST);
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs,
            stopwords_sha256: run.stopwords_sha256().to_string(),
            seeds: Seeds {
                classifier_split: cfg.classifier.split_seed,
                metadata_bootstrap: cfg.classifier.metadata_seed,
                polarization_bootstrap: cfg.polarization.seed,
                grid: cfg.polarization.grid.seed,
            },
            outputs,
            runtime: Runtime {
                output_dir: cfg.output_dir.display().to_string(),
                jobs: rayon::current_num_threads(),
                stages: timings.to_vec(),
            },
        })
    }
}

/// SHA-256 of every file under `dir`, keyed by `/`-separated relative path.
/// The manifest is hashed without its `runtime` block.
pub fn output_digest(dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out)?;
    Ok(out)
}

fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<(), CliError> {
    let mut entries = std::fs::read_dir(dir)
        .context(format!("cannot list {}", dir.display()))?
        .collect::<Result<Vec<_>, _>>()
        .context(format!("cannot list {}", dir.display()))?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            walk(root, &path, out)?;
            continue;
        }
        let rel = path
            .strip_prefix(root)
            .map_err(CliError::internal)?
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let bytes = std::fs::read(&path).context(format!("cannot read {}", path.display()))?;
        let digest = if rel == MANIFEST {
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).context(format!("malformed {rel}"))?;
            if let Some(map) = v.as_object_mut() {
                map.remove(RUNTIME_KEY);
            }
            sha256_hex(v.to_string().as_bytes())
        } else {
            sha256_hex(&bytes)
        };
        out.insert(rel, digest);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_manifest_runtime_only() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        std::fs::write(dir.path().join("sub/a.csv"), "x\n1\n").unwrap();
        let manifest = |ms: f64, tool: &str| {
            serde_json::json!({ "tool": tool, "runtime": { "stages": [{ "stage": "parse", "wall_ms": ms }] } })
                .to_string()
        };
        std::fs::write(dir.path().join(MANIFEST), manifest(1.0, "a")).unwrap();
        let first = output_digest(dir.path()).unwrap();
        assert_eq!(first.keys().collect::<Vec<_>>(), ["manifest.json", "sub/a.csv"]);
        std::fs::write(dir.path().join(MANIFEST), manifest(99.0, "a")).unwrap();
        assert_eq!(output_digest(dir.path()).unwrap(), first);
        std::fs::write(dir.path().join(MANIFEST), manifest(1.0, "b")).unwrap();
        assert_ne!(output_digest(dir.path()).unwrap(), first);
    }
}
