//! Configuration, orchestration and persistence for kssim experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod experiment;
pub mod init;
pub mod output;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
pub use experiment::{execute, ExperimentReport, KindAnalysis, RunRecord};
pub use output::ManifestEntry;

use std::path::Path;

/// Runs the experiment and writes its artifacts to `dir`.
///
/// Runs that fail numerically are recorded in the summary; the caller decides
/// whether that is fatal via [`ExperimentReport::first_failure`].
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<(ExperimentReport, Vec<ManifestEntry>)> {
    let report = execute(cfg)?;
    let manifest = output::persist(&report, dir)?;
    Ok((report, manifest))
}
