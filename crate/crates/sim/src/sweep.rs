//! Parameter sweeps over one axis, written as a CSV table.
//!
//! A sweep spec is a TOML file:
//!
//! ```toml
//! name = "interconnect"
//! axis = "uc_interconnect_ns"     # or "packet_size", "accel_cache_bytes"
//! values = [5, 100, 400, 700]     # optional; defaults to the axis' standard points
//! service = "memcached"           # every preset of this service...
//! # presets = ["memc_mid"]        # ...or an explicit list
//! repetitions = 1
//! seed = 1
//! requests = 20000
//! mode = "arcalis"
//!
//! [base]                          # any run-config keys, applied to every point
//! system.load = { kind = "closed_loop", window = 16 }
//! ```
//!
//! Repetition `r` runs with `repetition_seed(seed, r)`. Points run in
//! parallel, each on its own simulator instance, and rows come out in
//! (axis value, preset, repetition) order.

use std::collections::BTreeMap;
use std::path::Path;

use arcalis_core::rng::repetition_seed;
use arcalis_core::system::{Mode, RunOptions};
use arcalis_core::wire::Service;
use arcalis_core::workload::{WorkloadMix, PRESETS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::config::{merge, set_path};
use crate::{execute, CliError, RunConfig, TOOL_VERSION};

pub const SWEEP_FORMAT: &str = "arcalis-sweep/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// One-way CPU to accelerator UC-store latency.
    UcInterconnectNs,
    /// Value size for memcached, post text length for post storage.
    PacketSize,
    AccelCacheBytes,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::UcInterconnectNs => "uc_interconnect_ns",
            Axis::PacketSize => "packet_size",
            Axis::AccelCacheBytes => "accel_cache_bytes",
        }
    }

    pub fn standard_values(self) -> Vec<u64> {
        match self {
            Axis::UcInterconnectNs => vec![5, 100, 400, 700],
            Axis::PacketSize => vec![64, 512, 1024, 1518],
            Axis::AccelCacheBytes => [64, 128, 256, 512, 2048].iter().map(|k| k * 1024).collect(),
        }
    }

    fn key(self, service: Service) -> Option<&'static str> {
        match (self, service) {
            (Axis::UcInterconnectNs, _) => Some("system.latency.uc_interconnect_ns"),
            (Axis::AccelCacheBytes, _) => Some("system.memory.accel_cache_bytes"),
            (Axis::PacketSize, Service::Memcached) => Some("workload.value_size"),
            (Axis::PacketSize, Service::PostStorage) => Some("workload.post_text_len"),
            (Axis::PacketSize, Service::UniqueId) => None,
        }
    }
}

fn default_repetitions() -> u32 {
    1
}
fn default_seed() -> u64 {
    arcalis_core::workload::DEFAULT_SEED
}
fn default_requests() -> u64 {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub axis: Axis,
    #[serde(default)]
    pub values: Option<Vec<u64>>,
    #[serde(default)]
    pub service: Option<Service>,
    #[serde(default)]
    pub presets: Option<Vec<String>>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_requests")]
    pub requests: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub base: Table,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<SweepSpec, CliError> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| CliError::Config(format!("sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<SweepSpec, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        Self::parse(&text)
    }

    pub fn values(&self) -> Vec<u64> {
        self.values.clone().unwrap_or_else(|| self.axis.standard_values())
    }

    /// Explicit presets, else every preset of the named service.
    pub fn presets(&self) -> Vec<String> {
        match (&self.presets, self.service) {
            (Some(p), _) => p.clone(),
            (None, Some(s)) => PRESETS
                .iter()
                .filter(|p| WorkloadMix::preset(p).map(|m| m.service == s).unwrap_or(false))
                .map(|p| p.to_string())
                .collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("sweep {:?}: {m}", self.name)));
        if self.values().is_empty() {
            return bad("no axis values");
        }
        if self.presets.is_some() && self.service.is_some() {
            return bad("give either service or presets, not both");
        }
        let presets = self.presets();
        if presets.is_empty() {
            return bad("no presets");
        }
        if let Some(p) = presets.iter().find(|p| !PRESETS.contains(&p.as_str())) {
            return bad(&format!("unknown preset {p:?}"));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.requests == 0 {
            return bad("requests must be at least 1");
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<Point> {
        let mut pts = Vec::new();
        for (axis_index, &axis_value) in self.values().iter().enumerate() {
            for preset in self.presets() {
                for repetition in 0..self.repetitions {
                    pts.push(Point { axis_index, axis_value, preset: preset.clone(), repetition });
                }
            }
        }
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub axis_index: usize,
    pub axis_value: u64,
    pub preset: String,
    pub repetition: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub format: &'static str,
    pub tool_version: &'static str,
    pub sweep: String,
    pub config_fingerprint: String,
    pub axis: &'static str,
    pub axis_value: u64,
    pub preset: String,
    pub repetition: u32,
    pub seed: u64,
    pub mode: &'static str,
    pub status: &'static str,
    pub error: String,
    pub sim_time_ps: Option<u64>,
    pub throughput_rps: Option<f64>,
    pub p50_ns: Option<f64>,
    pub p99_ns: Option<f64>,
    pub deser_fraction: Option<f64>,
    pub rx_share: Option<f64>,
    pub mean_sim_time_ps: Option<f64>,
    pub mean_throughput_rps: Option<f64>,
    pub rel_sim_time: Option<f64>,
    pub rel_throughput: Option<f64>,
}

fn point_config(spec: &SweepSpec, p: &Point, seed: u64) -> Result<RunConfig, CliError> {
    let mix = WorkloadMix::preset(&p.preset).map_err(|e| CliError::Config(e.to_string()))?;
    let key = spec
        .axis
        .key(mix.service)
        .ok_or_else(|| CliError::Config(format!("axis {} does not apply to {}", spec.axis.name(), p.preset)))?;
    let mut t = Table::new();
    merge(&mut t, spec.base.clone());
    let path = |k: &str| k.split('.').map(str::to_string).collect::<Vec<_>>();
    set_path(&mut t, &path("workload.preset"), Value::String(p.preset.clone()))?;
    set_path(&mut t, &path("seed"), Value::Integer(seed as i64))?;
    set_path(&mut t, &path("requests"), Value::Integer(spec.requests as i64))?;
    set_path(&mut t, &path("system.mode"), Value::String(spec.mode.name().into()))?;
    set_path(&mut t, &path(key), Value::Integer(p.axis_value as i64))?;
    Value::Table(t).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
}

/// Run one point on its own. Aggregate columns are left empty.
pub fn run_point(spec: &SweepSpec, p: &Point) -> Row {
    let seed = repetition_seed(spec.seed, p.repetition);
    let mut row = Row {
        format: SWEEP_FORMAT,
        tool_version: TOOL_VERSION,
        sweep: spec.name.clone(),
        config_fingerprint: String::new(),
        axis: spec.axis.name(),
        axis_value: p.axis_value,
        preset: p.preset.clone(),
        repetition: p.repetition,
        seed,
        mode: spec.mode.name(),
        status: "error",
        error: String::new(),
        sim_time_ps: None,
        throughput_rps: None,
        p50_ns: None,
        p99_ns: None,
        deser_fraction: None,
        rx_share: None,
        mean_sim_time_ps: None,
        mean_throughput_rps: None,
        rel_sim_time: None,
        rel_throughput: None,
    };
    let resolved = match point_config(spec, p, seed).and_then(|c| c.resolve()) {
        Ok(r) => r,
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    row.config_fingerprint = resolved.fingerprint();
    match execute(&resolved, RunOptions::default()) {
        Ok((r, _)) => {
            row.status = "ok";
            row.sim_time_ps = Some(r.sim_time_ps);
            row.throughput_rps = Some(r.throughput_rps);
            row.p50_ns = r.latency.map(|l| l.p50_ns);
            row.p99_ns = r.latency.map(|l| l.p99_ns);
            row.deser_fraction = Some(r.deser_fraction);
            row.rx_share = Some(r.rx_share);
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Fill the mean columns (over repetitions of a point) and the relative
/// columns (against the first axis value of the same preset).
pub fn aggregate(rows: &mut [Row], first_axis_value: u64) {
    let mut groups: BTreeMap<(u64, String), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows.iter() {
        let g = groups.entry((r.axis_value, r.preset.clone())).or_default();
        if let (Some(t), Some(x)) = (r.sim_time_ps, r.throughput_rps) {
            g.0.push(t as f64);
            g.1.push(x);
        }
    }
    let means: BTreeMap<_, _> = groups.into_iter().map(|(k, (t, x))| (k, (mean(&t), mean(&x)))).collect();
    for r in rows.iter_mut() {
        let (t, x) = means[&(r.axis_value, r.preset.clone())];
        r.mean_sim_time_ps = t;
        r.mean_throughput_rps = x;
        let (t0, x0) = means.get(&(first_axis_value, r.preset.clone())).copied().unwrap_or((None, None));
        r.rel_sim_time = t.zip(t0).filter(|(_, b)| *b > 0.0).map(|(a, b)| a / b);
        r.rel_throughput = x.zip(x0).filter(|(_, b)| *b > 0.0).map(|(a, b)| a / b);
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<Row>, CliError> {
    spec.validate()?;
    let mut rows: Vec<Row> = spec.points().par_iter().map(|p| run_point(spec, p)).collect();
    aggregate(&mut rows, spec.values()[0]);
    Ok(rows)
}

pub fn rows_csv(rows: &[Row]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn service_expands_to_its_presets() {
        let s = SweepSpec::parse("name='x'\naxis='packet_size'\nservice='memcached'").unwrap();
        assert_eq!(s.presets(), ["memc_low", "memc_mid", "memc_high", "memc_tiny", "memc_small"]);
        assert_eq!(s.values(), [64, 512, 1024, 1518]);
        assert_eq!(s.points().len(), 20);
    }

    #[test]
    fn invalid_specs() {
        assert!(SweepSpec::parse("").is_err());
        assert!(SweepSpec::parse("name='x'\naxis='packet_size'").is_err());
        assert!(SweepSpec::parse("name='x'\naxis='packet_size'\npresets=['nope']").is_err());
        assert!(SweepSpec::parse("name='x'\naxis='warp'\npresets=['memc_low']").is_err());
        assert!(SweepSpec::parse("name='x'\naxis='packet_size'\npresets=['memc_low']\nvalues=[]").is_err());
        assert!(SweepSpec::parse("name='x'\naxis='packet_size'\npresets=['memc_low']\nrepetitions=0").is_err());
    }
}
