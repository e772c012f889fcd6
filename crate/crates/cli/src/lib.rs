//! Config-driven experiment runner for the `mmot` solver.
//!
//! A run reads an [`ExperimentConfig`](config::ExperimentConfig), solves the
//! entropic problem and writes a key/value report, coupling projections as
//! CSV, and graymap heatmaps and support masks.

pub mod catalog;
pub mod config;
pub mod output;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, OracleId, OutputSpec, Overrides};
pub use run::{execute, run, write_artifacts, Execution, RunArtifacts, RunError};

use std::path::Path;

/// Exit code for a run that finished without meeting its tolerance.
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Load a config from a file path, falling back to a bundled name.
pub fn resolve(spec: &str) -> Result<ExperimentConfig, ConfigError> {
    let path = Path::new(spec);
    if path.is_file() {
        return ExperimentConfig::load(path);
    }
    match catalog::bundled(spec) {
        Some(cfg) => cfg,
        None => Err(ConfigError::Invalid(format!("{spec:?} is neither a config file nor a bundled experiment"))),
    }
}
