//! Named comparison profiles: fixed grids of accelerated runs reported as MRPS.

use arcalis_core::system::{Mode, RunOptions, SystemConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, WorkloadSpec};
use crate::{execute, CliError, TOOL_VERSION};

pub const PROFILE_FORMAT: &str = "arcalis-profile/1";
pub const PROFILES: [&str; 1] = ["dagger_table"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub format: &'static str,
    pub tool_version: &'static str,
    pub config_fingerprint: String,
    pub profile: &'static str,
    pub preset: &'static str,
    pub set_ratio: f64,
    pub mrps: f64,
    /// Expected throughput for this cell.
    pub target_mrps: f64,
}

/// memc_tiny and memc_small at SET ratios 0.5 and 0.05.
const DAGGER_CELLS: [(&str, f64, f64); 4] =
    [("memc_tiny", 0.5, 1.00), ("memc_small", 0.5, 0.91), ("memc_tiny", 0.05, 1.58), ("memc_small", 0.05, 1.47)];

pub fn run_profile(name: &str, system: &SystemConfig, requests: u64, seed: u64) -> Result<Vec<ProfileRow>, CliError> {
    if name != "dagger_table" {
        return Err(CliError::Config(format!("unknown profile {name:?}; known: {}", PROFILES.join(", "))));
    }
    DAGGER_CELLS
        .par_iter()
        .map(|&(preset, set_ratio, target_mrps)| {
            let cfg = RunConfig {
                workload: WorkloadSpec { preset: preset.into(), set_ratio: Some(set_ratio), ..WorkloadSpec::default() },
                seed,
                requests,
                system: SystemConfig { mode: Mode::Arcalis, ..*system },
                ..RunConfig::default()
            };
            let resolved = cfg.resolve()?;
            let (r, _) = execute(&resolved, RunOptions::default())?;
            Ok(ProfileRow {
                format: PROFILE_FORMAT,
                tool_version: TOOL_VERSION,
                config_fingerprint: r.config_fingerprint,
                profile: "dagger_table",
                preset,
                set_ratio,
                mrps: r.throughput_rps / 1e6,
                target_mrps,
            })
        })
        .collect()
}

pub fn rows_csv(rows: &[ProfileRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
