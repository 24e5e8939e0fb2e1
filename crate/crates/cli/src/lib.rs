//! Command-line front end for the coupled-cavity entanglement pipeline.
//!
//! `point` evaluates one configuration, `sweep` writes a grid to CSV and
//! `preset` runs one of the built-in figure grids.

pub mod config;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use optomech::entanglement::Bipartition;
use optomech::sweep::presets::Preset;
use optomech::sweep::{evaluate_point, run_sweep, PointStatus};
use thiserror::Error;

pub use config::{preset_config, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("sweep failed: {0}")]
    Sweep(String),
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Error = 1,
    Unstable = 2,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.parse().map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

/// Evaluates the configured point and writes the report to `out`.
pub fn cmd_point<W: Write>(cfg: &RunConfig, out: W) -> Result<(Exit, Option<String>), CliError> {
    if cfg.sweep.is_some() {
        return Err(CliError::Usage(
            "config defines a sweep; run it with `sweep` or drop the [[sweep.axis]] tables".into(),
        ));
    }
    let input = cfg.model_input().map_err(|source| CliError::Config {
        path: PathBuf::new(),
        source,
    })?;
    let r = evaluate_point(&input, &Bipartition::ALL);
    output::write_report(out, &r).map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })?;
    Ok(match r.status {
        PointStatus::Ok => (Exit::Ok, None),
        PointStatus::Unstable => (Exit::Unstable, None),
        PointStatus::SolverError(msg) => (Exit::Error, Some(msg)),
    })
}

/// Runs the configured grid and writes it to `out`; returns the row count.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<usize, CliError> {
    let spec = cfg.sweep_spec().map_err(|source| CliError::Config {
        path: PathBuf::new(),
        source,
    })?;
    let records = run_sweep(&spec).map_err(|e| CliError::Sweep(e.to_string()))?;
    let io_err = |source| CliError::Io {
        path: out.to_path_buf(),
        source,
    };
    let file = File::create(out).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    output::write_csv(
        &mut w,
        &cfg.axis_columns(),
        &records,
        &spec.bipartitions,
        cfg.output.precision,
    )
    .map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(records.len())
}

pub fn cmd_preset(name: &str) -> Result<RunConfig, CliError> {
    name.parse::<Preset>().map(preset_config).map_err(CliError::Usage)
}
