//! Experiment runner behind the `rieszlab` binary.
//!
//! An experiment is named in a TOML manifest together with parameter
//! overrides. Running it writes a directory holding the resolved manifest,
//! `results.csv`, `summary.toml` and, when something fails, `failure.toml`.

pub mod artifacts;
pub mod experiments;
pub mod inputs;
pub mod manifest;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rieszlab::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("unknown experiment {0:?}; see `rieszlab experiment list`")]
    UnknownExperiment(String),

    #[error("input: {0}")]
    Input(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(f)
}
