//! Run manifests: the resolved config, the seed tree and a hash of every
//! file a run wrote.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use coolcn::harness::{cell_seed, noise_seed, ExperimentConfig};
use coolcn::privacy::DpManifest;
use coolcn::rng::child_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedNode {
    pub seed_index: usize,
    pub base: u64,
    pub graph: u64,
    pub tasks: u64,
    pub activations: u64,
    pub losses: u64,
    /// Master seed of each private-noise repetition; children are `noise/<stream-id>`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noise: Vec<u64>,
}

pub fn seed_tree(cfg: &ExperimentConfig, seeds: usize, noise_reps: usize) -> Vec<SeedNode> {
    (0..seeds)
        .map(|s| {
            let base = cell_seed(cfg.master_seed, s);
            SeedNode {
                seed_index: s,
                base,
                graph: child_seed(base, "graph"),
                tasks: child_seed(base, "tasks"),
                activations: child_seed(base, "activations"),
                losses: child_seed(base, "losses"),
                noise: (0..noise_reps).map(|r| noise_seed(base, r)).collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub seed_tree: Vec<SeedNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dp: Option<DpManifest>,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects written files and emits the manifest last.
pub struct OutputSet<'a> {
    dir: &'a Path,
    files: Vec<OutputFile>,
}

impl<'a> OutputSet<'a> {
    pub fn new(dir: &'a Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, content: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.files.push(OutputFile { path: name.to_string(), sha256: sha256_hex(content.as_bytes()) });
        Ok(())
    }

    pub fn finish(self, mut manifest: RunManifest) -> std::io::Result<RunManifest> {
        manifest.outputs = self.files;
        let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)? + "\n";
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

/// Files listed in `manifest` that are missing under `dir` or differ from their hash.
pub fn mismatches(manifest: &RunManifest, dir: &Path) -> Vec<String> {
    manifest
        .outputs
        .iter()
        .filter(|f| fs::read(dir.join(&f.path)).map(|b| sha256_hex(&b) != f.sha256).unwrap_or(true))
        .map(|f| f.path.clone())
        .collect()
}
