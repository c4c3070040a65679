//! Batch runner behind the `tempered-ld` binary.
//!
//! A run reads one [`ExperimentConfig`], writes a data file (`<command>.csv`
//! or `<command>.ndjson`) and `manifest.json` into the output directory.
//! Data files depend only on the config and seed, never on the thread count.
//! Floats are written in shortest round-trip form; infinities appear as
//! `inf` in CSV and `null` in NDJSON.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("{context}: {source}")]
    UpstreamError {
        context: String,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 success, 2 usage (reported by the argument parser), 3 invalid
    /// config, 4 numerical or sampling failure, 5 file system error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 3,
            CliError::UpstreamError { .. } => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid(_) => "ConfigInvalid",
            CliError::UpstreamError { .. } => "UpstreamError",
            CliError::Io { .. } => "IoError",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }

    pub fn upstream<E: std::error::Error + Send + Sync + 'static>(
        context: impl Into<String>,
    ) -> impl FnOnce(E) -> CliError {
        let context = context.into();
        move |e| CliError::UpstreamError {
            context,
            source: Box::new(e),
        }
    }
}

/// Data produced by a command.
#[derive(Debug, Clone, PartialEq)]
pub enum DataFile {
    Csv(String),
    Ndjson(String),
}

impl DataFile {
    pub fn extension(&self) -> &'static str {
        match self {
            DataFile::Csv(_) => "csv",
            DataFile::Ndjson(_) => "ndjson",
        }
    }

    pub fn contents(&self) -> &str {
        match self {
            DataFile::Csv(s) | DataFile::Ndjson(s) => s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub data: DataFile,
    pub summary: Value,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    data_file: String,
    seed: Option<u64>,
    threads: usize,
    wall_time_s: f64,
    config: &'a ExperimentConfig,
    summary: &'a Value,
}

/// Validates and runs a config, writing data and manifest into `out_dir`.
/// Returns the path of the data file.
pub fn run_to_dir(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(PathBuf, RunOutput), CliError> {
    config.check()?;
    let start = Instant::now();
    let out = commands::run(config)?;
    let wall = start.elapsed().as_secs_f64();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let name = format!("{}.{}", config.command(), out.data.extension());
    let data_path = out_dir.join(&name);
    std::fs::write(&data_path, out.data.contents()).map_err(io(&data_path))?;
    let manifest = Manifest {
        tool: "tempered-ld",
        version: env!("CARGO_PKG_VERSION"),
        command: config.command(),
        data_file: name,
        seed: config.seed(),
        threads: rayon::current_num_threads(),
        wall_time_s: wall,
        config,
        summary: &out.summary,
    };
    let manifest_path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(io(&manifest_path))?;
    Ok((data_path, out))
}

/// Shortest round-trip decimal form, switching to exponent notation for
/// very small or large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
