//! Config-driven experiment runner for `ellis-core`.
//!
//! A run loads an [`ExperimentConfig`], executes its pipeline step by step and
//! collects a [`Report`] that can be written as JSON, CSV or text tables.

pub mod cli;
pub mod config;
mod ops;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, Format, Op, Step};
pub use report::{emit_report, Report, StepReport, StepStatus, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] ellis_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Process exit code: 0 when every asserted invariant held, 2 on verdict
/// failures, 1 on execution errors.
pub fn exit_code(report: &Report) -> i32 {
    if report.summary.errors > 0 {
        1
    } else if report.summary.assertion_failures + report.summary.expectation_failures > 0 {
        2
    } else {
        0
    }
}

pub use ops::run_experiment;

/// Catalog listing as JSON rows, in catalog order.
pub fn list_catalog() -> serde_json::Value {
    serde_json::to_value(ellis_core::spaces::catalog_entries()).expect("catalog entries serialize")
}
