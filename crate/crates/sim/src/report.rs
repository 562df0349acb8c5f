//! Output files: event traces, comparison tables and per-preset chart data.
//! Every file carries the tool version and the config fingerprint.

use arcalis_core::cores::StageCycles;
use arcalis_core::metrics::{ComparisonReport, StatsReport};
use arcalis_core::system::RunOutput;
use serde::Serialize;

use crate::TOOL_VERSION;

pub const TRACE_FORMAT: &str = "arcalis-trace/1";
pub const COMPARE_FORMAT: &str = "arcalis-compare/1";
pub const CHART_FORMAT: &str = "arcalis-chart/1";

/// One `time_ps,actor,kind` line per processed event, after a `#` header
/// line naming the format, tool version and fingerprint.
pub fn trace_text(run: &RunOutput, fingerprint: &str) -> String {
    let mut o = format!("# format={TRACE_FORMAT} tool_version={TOOL_VERSION} config_fingerprint={fingerprint}\n");
    o.push_str("time_ps,actor,kind\n");
    for r in &run.trace {
        let actor = run.actor_names.get(r.actor.0 as usize).map(String::as_str).unwrap_or("?");
        o.push_str(&format!("{},{},{}\n", r.time.0, actor, r.kind));
    }
    o
}

#[derive(Debug, Serialize)]
struct CompareRow<'a> {
    format: &'static str,
    tool_version: &'static str,
    config_fingerprint: &'a str,
    preset: &'a str,
    seed: u64,
    requests: u64,
    baseline_sim_time_ps: u64,
    arcalis_sim_time_ps: u64,
    baseline_mrps: f64,
    arcalis_mrps: f64,
    speedup: f64,
    throughput_ratio: f64,
    instruction_reduction: f64,
    cycle_reduction: f64,
    codec_byte_reduction: f64,
}

/// A finished A/B pair for one preset.
#[derive(Clone, Debug)]
pub struct ComparedPreset {
    pub baseline: StatsReport,
    pub arcalis: StatsReport,
    pub comparison: ComparisonReport,
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// The speedup table, one row per preset in input order. The fingerprint
/// column is that of the accelerated run.
pub fn compare_csv(results: &[ComparedPreset]) -> String {
    csv_string(results.iter().map(|r| CompareRow {
        format: COMPARE_FORMAT,
        tool_version: TOOL_VERSION,
        config_fingerprint: &r.arcalis.config_fingerprint,
        preset: &r.comparison.workload,
        seed: r.comparison.seed,
        requests: r.baseline.requests_injected,
        baseline_sim_time_ps: r.baseline.sim_time_ps,
        arcalis_sim_time_ps: r.arcalis.sim_time_ps,
        baseline_mrps: r.baseline.throughput_rps / 1e6,
        arcalis_mrps: r.arcalis.throughput_rps / 1e6,
        speedup: r.comparison.speedup,
        throughput_ratio: r.comparison.throughput_ratio,
        instruction_reduction: r.comparison.instruction_reduction,
        cycle_reduction: r.comparison.cycle_reduction,
        codec_byte_reduction: r.comparison.codec_byte_reduction,
    }))
}

#[derive(Debug, Serialize)]
struct ChartRow<'a> {
    format: &'static str,
    tool_version: &'static str,
    config_fingerprint: &'a str,
    mode: &'static str,
    actor: &'a str,
    stage: &'static str,
    cycles: u64,
}

fn stages(s: &StageCycles) -> [(&'static str, u64); 6] {
    [
        ("header_parse", s.header_parse),
        ("dispatch", s.dispatch),
        ("deserialize", s.deserialize),
        ("logic", s.logic),
        ("header_create", s.header_create),
        ("serialize", s.serialize),
    ]
}

/// Stacked-bar data for one preset: cycles per (mode, actor, stage). Host
/// actors count CPU cycles, engines count accelerator cycles.
pub fn chart_csv(r: &ComparedPreset) -> String {
    let mut rows = Vec::new();
    for rep in [&r.baseline, &r.arcalis] {
        let mode = rep.mode.name();
        let fp = rep.config_fingerprint.as_str();
        let row = |actor, stage, cycles| ChartRow {
            format: CHART_FORMAT,
            tool_version: TOOL_VERSION,
            config_fingerprint: fp,
            mode,
            actor,
            stage,
            cycles,
        };
        for a in &rep.actors {
            for (stage, c) in stages(&a.stages) {
                rows.push(row(&a.name, stage, c));
            }
            rows.push(row(&a.name, "stub", a.stub_cycles));
            rows.push(row(&a.name, "uc", a.uc_cycles));
        }
        if rep.rx_engine.requests + rep.tx_engine.requests > 0 {
            for (name, e) in [("rx_engine", &rep.rx_engine), ("tx_engine", &rep.tx_engine)] {
                for (stage, c) in stages(&e.stages) {
                    rows.push(row(name, stage, c));
                }
            }
        }
    }
    csv_string(rows)
}
