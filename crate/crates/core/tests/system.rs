use std::collections::BTreeMap;

use arcalis_core::accel::fsm::is_legal;
use arcalis_core::calibration::Calibration;
use arcalis_core::metrics::{compare, finalize, StatsReport};
use arcalis_core::system::{run_frames, run_mix, Mode, RunOptions, RunOutput, SystemConfig};
use arcalis_core::wire::{deserialize, serialize, Direction, ErrorCode, RpcMessage, Service, Value};
use arcalis_core::workload::{generate, LoadMode, WorkloadMix, PRESETS};
use proptest::prelude::*;

fn cfg(mode: Mode) -> SystemConfig {
    SystemConfig { mode, ..SystemConfig::default() }
}

fn mix(preset: &str, n: u64, seed: u64) -> WorkloadMix {
    WorkloadMix::preset(preset).unwrap().with_requests(n).with_seed(seed)
}

fn report(c: &SystemConfig, m: &WorkloadMix, run: &RunOutput) -> StatsReport {
    finalize(run, m, &c.calibration.host, "test", "0").unwrap()
}

fn responses(c: &SystemConfig, m: &WorkloadMix) -> Vec<(u32, Vec<u8>)> {
    let mut r = run_mix(c, m, RunOptions { keep_responses: true, ..RunOptions::default() }).unwrap().responses;
    r.sort();
    r
}

#[test]
fn every_preset_conserves_requests_in_both_modes() {
    for p in PRESETS {
        for mode in [Mode::Baseline, Mode::Arcalis] {
            let m = mix(p, 3000, 5);
            let c = cfg(mode);
            let r = run_mix(&c, &m, RunOptions::default()).unwrap();
            assert_eq!(r.injected, 3000);
            assert_eq!(r.injected, r.completed + r.drops + r.errors, "{p} {mode:?}");
            assert_eq!((r.requests_in_flight, r.engine_in_flight), (0, 0));
            let rep = report(&c, &m, &r);
            let secs = rep.sim_time_ps as f64 * 1e-12;
            assert!((rep.throughput_rps - rep.requests_completed as f64 / secs).abs() < 1e-6 * rep.throughput_rps);
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    for mode in [Mode::Baseline, Mode::Arcalis] {
        let c = cfg(mode);
        let m = mix("post_mid", 2000, 3);
        let opts = RunOptions { trace_events: true, keep_responses: false };
        let a = run_mix(&c, &m, opts).unwrap();
        let b = run_mix(&c, &m, opts).unwrap();
        assert_eq!(report(&c, &m, &a).to_kv(), report(&c, &m, &b).to_kv());
        assert!(!a.trace.is_empty());
        assert_eq!(a.trace, b.trace);
        assert!(a.trace.windows(2).all(|w| w[0].time <= w[1].time));
    }
}

#[test]
fn engine_transitions_are_legal_and_engines_overlap() {
    let c = cfg(Mode::Arcalis);
    let r = run_mix(&c, &mix("memc_mid", 20_000, 1), RunOptions::default()).unwrap();
    for e in [&r.rx, &r.tx] {
        assert!(e.transitions.keys().all(|edge| is_legal(*edge)));
        assert_eq!(e.entered, e.finished);
        assert!(e.entered > 0);
    }
    assert!(r.both_busy_instants >= 1);
}

#[test]
fn engine_stage_cycles_fit_inside_busy_time() {
    let c = cfg(Mode::Arcalis);
    let m = mix("memc_high", 3000, 2);
    let rep = report(&c, &m, &run_mix(&c, &m, RunOptions::default()).unwrap());
    for e in [&rep.rx_engine, &rep.tx_engine] {
        assert!(e.stages.total() <= e.busy_cycles);
    }
    for a in &rep.actors {
        assert_eq!(a.busy_cycles, a.stages.total() + a.stub_cycles + a.uc_cycles + a.io_cycles, "{}", a.name);
    }
}

#[test]
fn lazy_mapping_takes_the_fault_path_and_still_answers() {
    let mut c = cfg(Mode::Arcalis);
    c.memory.prefault = false;
    let m = mix("memc_low", 2000, 4);
    let r = run_mix(&c, &m, RunOptions { keep_responses: true, ..RunOptions::default() }).unwrap();
    assert!(r.mem.page_faults > 0);
    assert!(r.rx.faults + r.tx.faults > 0);
    assert_eq!(r.completed, 2000);
    let mut got = r.responses;
    got.sort();
    assert_eq!(got, responses(&cfg(Mode::Baseline), &m));
}

#[test]
fn two_core_baseline_is_faster_and_equivalent() {
    let m = mix("post_low", 3000, 8);
    let one = cfg(Mode::Baseline);
    let two = SystemConfig { baseline_cores: 2, ..one };
    let a = run_mix(&one, &m, RunOptions::default()).unwrap();
    let b = run_mix(&two, &m, RunOptions::default()).unwrap();
    assert!(b.end_time < a.end_time);
    assert_eq!(responses(&one, &m), responses(&two, &m));
}

#[test]
fn fixed_rate_load_keeps_latency_near_unloaded() {
    let mut c = cfg(Mode::Arcalis);
    let m = mix("memc_low", 1000, 6);
    c.load = LoadMode::FixedRate { rate_rps: 100_000 };
    let light = report(&c, &m, &run_mix(&c, &m, RunOptions::default()).unwrap());
    let closed = report(&cfg(Mode::Arcalis), &m, &run_mix(&cfg(Mode::Arcalis), &m, RunOptions::default()).unwrap());
    assert!(light.latency.unwrap().p50_ns < closed.latency.unwrap().p50_ns);
    assert!(light.sim_time_ps >= 999 * 10_000_000);
}

fn frames_for(service: Service, msgs: &[RpcMessage]) -> Vec<Option<Vec<u8>>> {
    msgs.iter().map(|m| Some(serialize(m, &service.schema()).unwrap().0)).collect()
}

#[test]
fn malformed_requests_get_error_frames_in_both_modes() {
    let svc = Service::Memcached;
    let good = RpcMessage::request(1, 0, vec![(1, Value::Bytes(b"0000000000000001".to_vec()))]);
    let mut frames = frames_for(svc, &[good.clone(), RpcMessage { seq_id: 1, ..good.clone() }, RpcMessage { seq_id: 2, ..good.clone() }]);
    frames[1].as_mut().unwrap()[6] = 0x44; // unknown method
    frames[2].as_mut().unwrap()[4] = 0x09; // bad version
    frames.push(Some(frames[0].as_ref().unwrap()[..12].to_vec())); // truncated, seq 0 header
    let m = WorkloadMix::preset("memc_low").unwrap().with_requests(frames.len() as u64);
    let mut outs = Vec::new();
    for mode in [Mode::Baseline, Mode::Arcalis] {
        let r = run_frames(&cfg(mode), svc, &frames, &m, RunOptions { keep_responses: true, ..RunOptions::default() }).unwrap();
        assert_eq!(r.injected, r.completed + r.drops + r.errors);
        assert_eq!(r.errors, 3, "{mode:?}");
        let mut resp = r.responses;
        resp.sort();
        outs.push(resp);
    }
    assert_eq!(outs[0], outs[1]);
    let codes: Vec<i32> = outs[0]
        .iter()
        .filter_map(|(_, b)| deserialize(b, &svc.schema()).ok())
        .filter(|m| m.direction == Direction::Error)
        .map(|m| match m.fields[0].1 {
            Value::I32(c) => c,
            _ => unreachable!(),
        })
        .collect();
    assert!(codes.contains(&(ErrorCode::UnknownMethod as i32)));
    assert!(codes.contains(&(ErrorCode::MalformedFrame as i32)));
}

#[test]
fn undersized_buffers_drop_or_reject_without_losing_requests() {
    let mut c = cfg(Mode::Arcalis);
    c.memory.buffer_bytes = 4096;
    c.load = LoadMode::ClosedLoop { window: 64 };
    let m = mix("post_low", 2000, 1);
    let r = run_mix(&c, &m, RunOptions { trace_events: true, ..RunOptions::default() }).unwrap();
    assert_eq!(r.injected, r.completed + r.drops + r.errors);
    assert!(r.completed > 0);
    assert!(r.drops + r.errors + r.rejections > 0);
    assert!(r.trace.iter().any(|e| e.kind == "app_retry"));
}

#[test]
fn null_rpc_calibration_gives_no_speedup() {
    for p in ["memc_mid", "post_mid", "unique_id"] {
        let m = mix(p, 5000, 1);
        let mut b = cfg(Mode::Baseline);
        b.calibration = Calibration::null_rpc();
        let a = SystemConfig { mode: Mode::Arcalis, ..b };
        let rb = report(&b, &m, &run_mix(&b, &m, RunOptions::default()).unwrap());
        let ra = report(&a, &m, &run_mix(&a, &m, RunOptions::default()).unwrap());
        let s = compare(&rb, &ra).unwrap().speedup;
        println!("{p} null speedup {s:.3}");
        assert!((0.8..=1.2).contains(&s), "{p}: {s}");
    }
}

#[test]
fn invalid_configs_are_refused() {
    let m = mix("memc_low", 10, 1);
    let bad = [
        SystemConfig { baseline_cores: 3, ..SystemConfig::default() },
        SystemConfig { rx_burst: 0, ..SystemConfig::default() },
        SystemConfig { load: LoadMode::ClosedLoop { window: 0 }, ..SystemConfig::default() },
    ];
    for c in bad {
        assert!(run_mix(&c, &m, RunOptions::default()).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn modes_agree_on_every_response(seed in any::<u64>(), preset in 0usize..9, n in 1u64..400) {
        let m = mix(PRESETS[preset], n, seed);
        let base = responses(&cfg(Mode::Baseline), &m);
        prop_assert_eq!(base.len() as u64, n);
        prop_assert_eq!(&base, &responses(&cfg(Mode::Arcalis), &m));
        let seqs: BTreeMap<u32, usize> = base.iter().map(|(s, _)| (*s, 1)).collect();
        prop_assert_eq!(seqs.len() as u64, n);
    }

    #[test]
    fn trace_generation_matches_run_input(seed in any::<u64>()) {
        let m = mix("memc_small", 50, seed);
        let t = generate(&m).unwrap();
        let r = run_mix(&cfg(Mode::Baseline), &m, RunOptions { keep_responses: true, ..RunOptions::default() }).unwrap();
        prop_assert_eq!(r.responses.len(), t.len());
    }
}
