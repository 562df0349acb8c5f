//! Run reports, A/B comparison and the flat key=value report format.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cores::{CoreCounters, HostCosts, StageCycles};
use crate::mem::MemStats;
use crate::rng::PRNG_ID;
use crate::system::{Mode, RunOutput};
use crate::workload::WorkloadMix;

pub const REPORT_FORMAT: &str = "arcalis-report/1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50_ns: f64,
    pub p95_ns: f64,
    pub p99_ns: f64,
    pub mean_ns: f64,
    pub max_ns: f64,
}

/// Exact nearest-rank percentiles; `None` for an empty sample.
pub fn percentiles(samples_ps: &[u64]) -> Option<Percentiles> {
    if samples_ps.is_empty() {
        return None;
    }
    let mut v = samples_ps.to_vec();
    v.sort_unstable();
    let n = v.len();
    let rank = |q: f64| {
        let r = libm::ceil(q * n as f64) as usize;
        v[r.clamp(1, n) - 1] as f64 / 1000.0
    };
    let sum: u128 = v.iter().map(|&x| x as u128).sum();
    Some(Percentiles {
        p50_ns: rank(0.50),
        p95_ns: rank(0.95),
        p99_ns: rank(0.99),
        mean_ns: sum as f64 / n as f64 / 1000.0,
        max_ns: v[n - 1] as f64 / 1000.0,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActorStats {
    pub name: String,
    pub stages: StageCycles,
    pub stub_cycles: u64,
    pub uc_cycles: u64,
    pub io_cycles: u64,
    pub stall_cycles: u64,
    pub busy_cycles: u64,
    pub instructions: u64,
    pub requests: u64,
    pub codec_calls: u64,
}

impl ActorStats {
    fn from_core(name: &str, c: &CoreCounters, host: &HostCosts) -> Self {
        ActorStats {
            name: name.into(),
            stages: c.stages,
            stub_cycles: c.stub,
            uc_cycles: c.uc,
            io_cycles: c.io,
            stall_cycles: c.stall,
            busy_cycles: c.busy_cycles(),
            instructions: c.instructions(host),
            requests: c.requests,
            codec_calls: c.codec_calls,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineStats {
    pub stages: StageCycles,
    pub busy_cycles: u64,
    pub requests: u64,
    pub faults: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub workload: String,
    pub mode: Mode,
    pub seed: u64,
    pub prng: String,
    pub config_fingerprint: String,
    pub tool_version: String,
    pub requests_injected: u64,
    pub requests_completed: u64,
    pub drops: u64,
    pub errors: u64,
    pub rejections: u64,
    pub sim_time_ps: u64,
    pub throughput_rps: f64,
    pub latency: Option<Percentiles>,
    pub actors: Vec<ActorStats>,
    pub rx_engine: EngineStats,
    pub tx_engine: EngineStats,
    pub deser_fraction: f64,
    pub rx_share: f64,
    pub fsm_transitions: BTreeMap<String, u64>,
    pub both_busy_instants: u64,
    pub cpu_active_cycles: u64,
    pub cpu_instructions: u64,
    pub cpu_codec_bytes: u64,
    pub mem: MemStats,
    pub events: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("conservation violated: injected {injected} != completed {completed} + drops {drops} + errors {errors}")]
    ConservationViolation { injected: u64, completed: u64, drops: u64, errors: u64 },
    #[error("runs differ in {0}")]
    MismatchedRuns(&'static str),
}

/// Build the report of a run at quiescence.
pub fn finalize(
    run: &RunOutput,
    mix: &WorkloadMix,
    host: &HostCosts,
    fingerprint: &str,
    tool_version: &str,
) -> Result<StatsReport, MetricsError> {
    if run.injected != run.completed + run.drops + run.errors || run.requests_in_flight != 0 {
        return Err(MetricsError::ConservationViolation {
            injected: run.injected,
            completed: run.completed,
            drops: run.drops,
            errors: run.errors,
        });
    }
    let secs = run.end_time.as_secs_f64();
    let throughput_rps = if secs > 0.0 { run.completed as f64 / secs } else { 0.0 };
    let actors: Vec<ActorStats> = run.cores.iter().map(|c| ActorStats::from_core(&c.name, &c.counters, host)).collect();
    let rx_total = run.rx.stages.total();
    let eng_total = rx_total + run.tx.stages.total();
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut fsm_transitions = BTreeMap::new();
    for (name, e) in [("rx", &run.rx), ("tx", &run.tx)] {
        for ((from, trig, to), n) in &e.transitions {
            fsm_transitions.insert(format!("{name}:{}-{}->{}", from.name(), trig.name(), to.name()), *n);
        }
    }
    let engine = |e: &crate::system::EngineCounters| EngineStats {
        stages: e.stages,
        busy_cycles: e.busy_cycles,
        requests: e.requests,
        faults: e.faults,
    };
    Ok(StatsReport {
        workload: mix.name.clone(),
        mode: run.mode,
        seed: mix.seed,
        prng: PRNG_ID.into(),
        config_fingerprint: fingerprint.into(),
        tool_version: tool_version.into(),
        requests_injected: run.injected,
        requests_completed: run.completed,
        drops: run.drops,
        errors: run.errors,
        rejections: run.rejections,
        sim_time_ps: run.end_time.0,
        throughput_rps,
        latency: percentiles(&run.latencies_ps),
        cpu_active_cycles: run.cores.iter().map(|c| c.counters.active_cycles()).sum(),
        cpu_instructions: actors.iter().map(|a| a.instructions).sum(),
        actors,
        rx_engine: engine(&run.rx),
        tx_engine: engine(&run.tx),
        deser_fraction: ratio(run.rx.stages.deserialize, eng_total),
        rx_share: ratio(rx_total, eng_total),
        fsm_transitions,
        both_busy_instants: run.both_busy_instants,
        cpu_codec_bytes: run.cpu_codec_bytes,
        mem: run.mem,
        events: run.events,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub workload: String,
    pub seed: u64,
    pub speedup: f64,
    pub throughput_ratio: f64,
    /// Reductions as fractions in [0, 1] (negative when the second run is worse).
    pub instruction_reduction: f64,
    pub cycle_reduction: f64,
    pub codec_byte_reduction: f64,
}

fn reduction(before: u64, after: u64) -> f64 {
    if before == 0 {
        0.0
    } else {
        1.0 - after as f64 / before as f64
    }
}

/// Compare a baseline report with an accelerated one on the same workload.
pub fn compare(base: &StatsReport, accel: &StatsReport) -> Result<ComparisonReport, MetricsError> {
    if base.workload != accel.workload {
        return Err(MetricsError::MismatchedRuns("workload"));
    }
    if base.seed != accel.seed {
        return Err(MetricsError::MismatchedRuns("seed"));
    }
    if base.requests_injected != accel.requests_injected {
        return Err(MetricsError::MismatchedRuns("request count"));
    }
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    Ok(ComparisonReport {
        workload: base.workload.clone(),
        seed: base.seed,
        speedup: div(base.sim_time_ps as f64, accel.sim_time_ps as f64),
        throughput_ratio: div(accel.throughput_rps, base.throughput_rps),
        instruction_reduction: reduction(base.cpu_instructions, accel.cpu_instructions),
        cycle_reduction: reduction(base.cpu_active_cycles, accel.cpu_active_cycles),
        codec_byte_reduction: reduction(base.cpu_codec_bytes, accel.cpu_codec_bytes),
    })
}

fn stage_kv(out: &mut String, prefix: &str, s: &StageCycles) {
    for (k, v) in [
        ("header_parse", s.header_parse),
        ("dispatch", s.dispatch),
        ("deserialize", s.deserialize),
        ("logic", s.logic),
        ("header_create", s.header_create),
        ("serialize", s.serialize),
    ] {
        let _ = writeln!(out, "{prefix}.{k}={v}");
    }
}

impl StatsReport {
    /// Flat `key=value` text, one pair per line, in a fixed key order.
    pub fn to_kv(&self) -> String {
        let mut o = String::new();
        let w = &mut o;
        let _ = writeln!(w, "format={REPORT_FORMAT}");
        let _ = writeln!(w, "tool_version={}", self.tool_version);
        let _ = writeln!(w, "config_fingerprint={}", self.config_fingerprint);
        let _ = writeln!(w, "workload={}", self.workload);
        let _ = writeln!(w, "mode={}", self.mode.name());
        let _ = writeln!(w, "seed={}", self.seed);
        let _ = writeln!(w, "prng={}", self.prng);
        let _ = writeln!(w, "requests_injected={}", self.requests_injected);
        let _ = writeln!(w, "requests_completed={}", self.requests_completed);
        let _ = writeln!(w, "drops={}", self.drops);
        let _ = writeln!(w, "errors={}", self.errors);
        let _ = writeln!(w, "rejections={}", self.rejections);
        let _ = writeln!(w, "sim_time_ps={}", self.sim_time_ps);
        let _ = writeln!(w, "throughput_rps={:.3}", self.throughput_rps);
        match &self.latency {
            Some(p) => {
                let _ = writeln!(w, "latency.p50_ns={:.3}", p.p50_ns);
                let _ = writeln!(w, "latency.p95_ns={:.3}", p.p95_ns);
                let _ = writeln!(w, "latency.p99_ns={:.3}", p.p99_ns);
                let _ = writeln!(w, "latency.mean_ns={:.3}", p.mean_ns);
                let _ = writeln!(w, "latency.max_ns={:.3}", p.max_ns);
            }
            None => {
                let _ = writeln!(w, "latency=empty");
            }
        }
        for a in &self.actors {
            let p = format!("actor.{}", a.name);
            stage_kv(w, &format!("{p}.stage"), &a.stages);
            let _ = writeln!(w, "{p}.stub_cycles={}", a.stub_cycles);
            let _ = writeln!(w, "{p}.uc_cycles={}", a.uc_cycles);
            let _ = writeln!(w, "{p}.io_cycles={}", a.io_cycles);
            let _ = writeln!(w, "{p}.stall_cycles={}", a.stall_cycles);
            let _ = writeln!(w, "{p}.busy_cycles={}", a.busy_cycles);
            let _ = writeln!(w, "{p}.instructions={}", a.instructions);
            let _ = writeln!(w, "{p}.requests={}", a.requests);
            let _ = writeln!(w, "{p}.codec_calls={}", a.codec_calls);
        }
        for (name, e) in [("rx", &self.rx_engine), ("tx", &self.tx_engine)] {
            stage_kv(w, &format!("engine.{name}.stage"), &e.stages);
            let _ = writeln!(w, "engine.{name}.busy_cycles={}", e.busy_cycles);
            let _ = writeln!(w, "engine.{name}.requests={}", e.requests);
            let _ = writeln!(w, "engine.{name}.faults={}", e.faults);
        }
        let _ = writeln!(w, "engine.deser_fraction={:.6}", self.deser_fraction);
        let _ = writeln!(w, "engine.rx_share={:.6}", self.rx_share);
        let _ = writeln!(w, "engine.both_busy_instants={}", self.both_busy_instants);
        for (k, v) in &self.fsm_transitions {
            let _ = writeln!(w, "fsm.{k}={v}");
        }
        let _ = writeln!(w, "cpu.active_cycles={}", self.cpu_active_cycles);
        let _ = writeln!(w, "cpu.instructions={}", self.cpu_instructions);
        let _ = writeln!(w, "cpu.codec_bytes={}", self.cpu_codec_bytes);
        let m = &self.mem;
        for (k, v) in [
            ("l1_hits", m.l1_hits),
            ("l1_misses", m.l1_misses),
            ("l2_hits", m.l2_hits),
            ("l2_misses", m.l2_misses),
            ("llc_hits", m.llc_hits),
            ("llc_misses", m.llc_misses),
            ("accel_hits", m.accel_hits),
            ("accel_misses", m.accel_misses),
            ("tlb_hits", m.tlb_hits),
            ("tlb_misses", m.tlb_misses),
            ("page_faults", m.page_faults),
            ("host_faults", m.host_faults),
            ("migrations", m.migrations),
            ("dca_lines", m.dca_lines),
            ("dca_bytes", m.dca_bytes),
            ("dca_drops", m.dca_drops),
        ] {
            let _ = writeln!(w, "mem.{k}={v}");
        }
        let _ = writeln!(w, "events={}", self.events);
        o
    }
}

impl ComparisonReport {
    pub fn to_kv(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "workload={}", self.workload);
        let _ = writeln!(o, "seed={}", self.seed);
        let _ = writeln!(o, "speedup={:.6}", self.speedup);
        let _ = writeln!(o, "throughput_ratio={:.6}", self.throughput_ratio);
        let _ = writeln!(o, "instruction_reduction={:.6}", self.instruction_reduction);
        let _ = writeln!(o, "cycle_reduction={:.6}", self.cycle_reduction);
        let _ = writeln!(o, "codec_byte_reduction={:.6}", self.codec_byte_reduction);
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let v: Vec<u64> = (1..=100).map(|x| x * 1000).collect();
        let p = percentiles(&v).unwrap();
        assert_eq!((p.p50_ns, p.p95_ns, p.p99_ns), (50.0, 95.0, 99.0));
        assert_eq!(p.mean_ns, 50.5);
        assert!(percentiles(&[]).is_none());
        let one = percentiles(&[7000]).unwrap();
        assert_eq!((one.p50_ns, one.p99_ns), (7.0, 7.0));
    }

    #[test]
    fn reduction_handles_zero_baseline() {
        assert_eq!(reduction(0, 5), 0.0);
        assert_eq!(reduction(100, 25), 0.75);
    }
}
