//! Config-driven experiment runner for `sphgd-core`.
//!
//! A run reads one TOML recipe, executes it inside a dedicated thread pool,
//! writes CSV/JSON-lines/SVG outputs, and finishes with `manifest.json`,
//! which echoes the effective config and lists every output with its SHA-256.

pub mod chart;
pub mod config;
pub mod error;
pub mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::ExperimentConfig;
pub use error::CliError;

pub const MANIFEST_SCHEMA: &str = "sphgd-run-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Command-line overrides for a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads; never changes output bytes.
    pub threads: Option<usize>,
    /// Audit every statistical-query response.
    pub audit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub artifact: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub audit: bool,
    /// The effective config, after command-line overrides.
    pub config: ExperimentConfig,
    /// Same config as TOML; feeding it back to `run` reproduces the outputs.
    pub config_toml: String,
    pub timings: Timings,
    pub files: Vec<FileEntry>,
    pub summary: serde_json::Map<String, serde_json::Value>,
    /// "ok", or "flagged" when a check inside the experiment failed.
    pub status: String,
    pub flags: Vec<String>,
}

impl RunManifest {
    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Loads a config file and runs it.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunManifest, CliError> {
    run(ExperimentConfig::load(path)?, opts)
}

/// Runs an experiment and writes its outputs and manifest.
pub fn run(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &opts.output_dir {
        cfg.output_dir = Some(dir.clone());
    }
    cfg.validate()?;
    let dir = cfg.output_dir.clone().ok_or_else(|| CliError::Config {
        field: Some("output_dir".into()),
        message: "no output directory in the config or on the command line".into(),
    })?;
    if opts.threads == Some(0) {
        return Err(CliError::Config { field: Some("--threads".into()), message: "must be positive".into() });
    }

    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Config { field: Some("--threads".into()), message: e.to_string() })?;
    let outputs = pool.install(|| experiments::execute(&cfg, opts.audit))?;

    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut files = Vec::with_capacity(outputs.files.len());
    for (name, bytes) in &outputs.files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        files.push(FileEntry { path: name.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
    }
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        artifact: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment.name().into(),
        seed: cfg.seed,
        threads: opts.threads,
        audit: opts.audit,
        config_toml: cfg.to_toml_string(),
        config: cfg,
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
            phases: outputs.phases.into_iter().map(|(name, seconds)| Phase { name, seconds }).collect(),
        },
        files,
        summary: outputs.summary,
        status: if outputs.flags.is_empty() { "ok" } else { "flagged" }.into(),
        flags: outputs.flags,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

/// Checks that every file a manifest lists exists with the recorded digest.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, CliError> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    let mut problems = Vec::new();
    for f in &manifest.files {
        match std::fs::read(dir.join(&f.path)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
            Ok(_) => problems.push(format!("{}: digest mismatch", f.path)),
            Err(e) => problems.push(format!("{}: {e}", f.path)),
        }
    }
    Ok(problems)
}
