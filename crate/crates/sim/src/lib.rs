//! File formats, batch experiments and the command-line front end for the
//! `arcalis-core` simulator.

use std::path::PathBuf;

use arcalis_core::metrics::{finalize, MetricsError, StatsReport};
use arcalis_core::system::{run_mix, RunOptions, RunOutput, SimFailure};
use thiserror::Error;

pub mod config;
pub mod profile;
pub mod report;
pub mod schema_file;
pub mod sweep;

pub use config::{ResolvedRun, RunConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const INVARIANT: i32 = 2;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),
    #[error("simulation failed: {0}")]
    Sim(SimFailure),
    #[error("report: {0}")]
    Metrics(MetricsError),
}

impl From<SimFailure> for CliError {
    fn from(e: SimFailure) -> Self {
        CliError::Sim(e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Metrics(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(..) => exit::USAGE,
            CliError::Sim(SimFailure::Config(_) | SimFailure::Workload(_)) => exit::USAGE,
            CliError::Sim(_) => exit::INVARIANT,
            CliError::Metrics(MetricsError::ConservationViolation { .. }) => exit::INVARIANT,
            CliError::Metrics(MetricsError::MismatchedRuns(_)) => exit::USAGE,
        }
    }
}

/// Run one resolved configuration and build its report.
pub fn execute(run: &ResolvedRun, opts: RunOptions) -> Result<(StatsReport, RunOutput), CliError> {
    let out = run_mix(&run.system, &run.mix, opts)?;
    let report = finalize(&out, &run.mix, &run.system.calibration.host, &run.fingerprint(), TOOL_VERSION)?;
    Ok((report, out))
}

pub fn write_file(path: &std::path::Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Run `base` in both modes for each preset, presets in parallel.
pub fn compare_presets(base: &RunConfig, presets: &[String]) -> Result<Vec<report::ComparedPreset>, CliError> {
    use arcalis_core::system::Mode;
    use rayon::prelude::*;
    presets
        .par_iter()
        .map(|p| {
            let mut cfg = base.clone();
            cfg.workload.preset = p.clone();
            let resolved = cfg.resolve()?;
            let (baseline, _) = execute(&resolved.with_mode(Mode::Baseline), RunOptions::default())?;
            let (arcalis, _) = execute(&resolved.with_mode(Mode::Arcalis), RunOptions::default())?;
            let comparison = arcalis_core::metrics::compare(&baseline, &arcalis)?;
            Ok(report::ComparedPreset { baseline, arcalis, comparison })
        })
        .collect()
}
