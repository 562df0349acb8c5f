use std::path::PathBuf;

use arcalis_core::calibration::Calibration;
use arcalis_core::system::Mode;
use arcalis_core::workload::{LoadMode, Op, OpRatio, PRESETS};
use arcalis_sim::config::{load, load_calibration, parse_override, RunConfig};
use proptest::prelude::*;

fn profiles() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../profiles")
}

#[test]
fn shipped_calibration_file_is_the_builtin_default() {
    assert_eq!(load_calibration(&profiles().join("calibration.default.toml")).unwrap(), Calibration::shipped());
}

#[test]
fn example_config_loads() {
    let cfg = load(Some(&profiles().join("run.example.toml")), &[]).unwrap();
    assert_eq!(cfg.workload.preset, "memc_mid");
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.system.calibration, Calibration::shipped());
    assert_eq!(cfg.system.load, LoadMode::ClosedLoop { window: 16 });
    cfg.resolve().unwrap();
}

#[test]
fn inline_calibration_keys_override_the_profile_file() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.toml");
    std::fs::write(&cal, "[logic]\nget = 7\nset = 9\n").unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "calibration_file = \"cal.toml\"\n[system.calibration.logic]\nset = 11\n").unwrap();
    let cfg = load(Some(&cfg_path), &[]).unwrap();
    assert_eq!(cfg.system.calibration.logic.get, 7);
    assert_eq!(cfg.system.calibration.logic.set, 11);
    assert_eq!(cfg.system.calibration.cpu, Calibration::shipped().cpu);
}

#[test]
fn flat_overrides_cover_nested_and_enum_keys() {
    let cfg = load(
        None,
        &[
            "system.mode=baseline".into(),
            "system.baseline_cores=2".into(),
            "system.load={kind=\"fixed_rate\", rate_rps=500000}".into(),
            "system.memory.prefault=false".into(),
            "system.calibration.engine.queue_depth=4".into(),
            "workload.set_ratio=0.25".into(),
        ],
    )
    .unwrap();
    assert_eq!(cfg.system.mode, Mode::Baseline);
    assert_eq!(cfg.system.baseline_cores, 2);
    assert_eq!(cfg.system.load, LoadMode::FixedRate { rate_rps: 500_000 });
    assert!(!cfg.system.memory.prefault);
    assert_eq!(cfg.system.calibration.engine.queue_depth, 4);
    let mix = cfg.resolve().unwrap().mix;
    assert_eq!(mix.ratio(Op::Set), 0.25);
    assert_eq!(mix.ratio(Op::Get), 0.75);
}

#[test]
fn custom_op_mix() {
    let cfg = load(None, &["workload.ops=[{op=\"get\", ratio=1.0}]".into()]).unwrap();
    let mix = cfg.resolve().unwrap().mix;
    assert_eq!(mix.ops, vec![OpRatio { op: Op::Get, ratio: 1.0 }]);
    let bad = load(None, &["workload.ops=[{op=\"store_post\", ratio=1.0}]".into()]).unwrap();
    assert!(bad.resolve().is_err(), "ops from another service");
}

#[test]
fn invalid_values_fail_resolution() {
    for o in ["system.max_payload=0", "system.baseline_cores=3", "requests=0", "workload.preset=\"nonsense\""] {
        let r = load(None, &[o.into()]).and_then(|c| c.resolve());
        assert!(r.is_err(), "{o}");
    }
    assert!(load(None, &["system.mode=turbo".into()]).is_err());
}

#[test]
fn fingerprint_ignores_output_paths_but_not_calibration() {
    let a = load(None, &[]).unwrap().resolve().unwrap();
    let b = load(None, &["output.report=\"x.kv\"".into()]).unwrap().resolve().unwrap();
    let c = load(None, &["system.calibration.logic.get=1".into()]).unwrap().resolve().unwrap();
    assert_eq!(a.fingerprint(), b.fingerprint());
    assert_ne!(a.fingerprint(), c.fingerprint());
}

proptest! {
    #[test]
    fn numeric_overrides_land_verbatim(seed in 0u64..i64::MAX as u64, n in 1u64..1_000_000, ns in 0u64..10_000) {
        let cfg = load(None, &[
            format!("seed={seed}"),
            format!("requests={n}"),
            format!("system.latency.uc_interconnect_ns={ns}"),
        ]).unwrap();
        prop_assert_eq!(cfg.seed, seed);
        prop_assert_eq!(cfg.requests, n);
        prop_assert_eq!(cfg.system.latency.uc_interconnect_ns, ns);
    }

    #[test]
    fn fingerprint_is_a_function_of_content(p in 0usize..9, seed in 0u64..1000) {
        let mk = || {
            let mut c = RunConfig::default();
            c.workload.preset = PRESETS[p].into();
            c.seed = seed;
            c.resolve().unwrap().fingerprint()
        };
        prop_assert_eq!(mk(), mk());
        let mut other = RunConfig::default();
        other.workload.preset = PRESETS[p].into();
        other.seed = seed + 1;
        prop_assert_ne!(mk(), other.resolve().unwrap().fingerprint());
    }

    #[test]
    fn override_values_parse_as_toml_or_string(word in "[a-z][a-z_]{0,12}") {
        let (_, v) = parse_override(&format!("k={word}")).unwrap();
        let expected = match word.as_str() {
            "true" => toml::Value::Boolean(true),
            "false" => toml::Value::Boolean(false),
            "inf" => toml::Value::Float(f64::INFINITY),
            _ => toml::Value::String(word.clone()),
        };
        if word != "nan" {
            prop_assert_eq!(v, expected);
        }
    }
}
