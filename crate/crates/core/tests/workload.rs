use arcalis_core::rng::SimRng;
use arcalis_core::simkern::SimTime;
use arcalis_core::workload::Zipf;
use arcalis_core::workload::{generate, offered_load, ArrivalSchedule, LoadMode, Op, WorkloadMix, PRESETS};
use proptest::prelude::*;

fn harmonic(n: u64, s: f64) -> f64 {
    (1..=n).map(|k| (k as f64).powf(-s)).sum()
}

#[test]
fn zipf_pmf_matches_closed_form() {
    for (n, s) in [(10u64, 0.99), (1000, 0.5), (100_000, 0.99), (7, 2.0)] {
        let z = Zipf::new(n, s);
        let h = harmonic(n, s);
        for k in [1, 2, n / 2 + 1, n] {
            let want = (k as f64).powf(-s) / h;
            assert!((z.pmf(k) - want).abs() < 1e-9 * want.max(1e-300) + 1e-15, "n={n} s={s} k={k}");
        }
    }
}

#[test]
fn zipf_empirical_head_frequencies() {
    let z = Zipf::new(1000, 0.99);
    let mut rng = SimRng::new(42, 0);
    let n = 200_000;
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let k = z.sample(&mut rng);
        if k <= 3 {
            counts[k as usize] += 1;
        }
    }
    for k in 1..=3u64 {
        let p = z.pmf(k);
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((counts[k as usize] as f64 - n as f64 * p).abs() < 5.0 * sd, "rank {k}");
    }
}

#[test]
fn op_mix_follows_ratios() {
    let mix = WorkloadMix::preset("post_low").unwrap().with_requests(50_000).with_seed(9);
    let t = generate(&mix).unwrap();
    let n = t.len() as f64;
    for (op, p) in [(Op::StorePost, 0.1), (Op::ReadPost, 0.5), (Op::ReadPosts, 0.4)] {
        let c = t.messages.iter().filter(|m| m.method_id == op.method_id()).count() as f64;
        assert!((c / n - p).abs() < 5.0 * (p * (1.0 - p) / n).sqrt(), "{op:?}");
    }
}

#[test]
fn every_preset_generates_sequential_ids() {
    for p in PRESETS {
        let t = generate(&WorkloadMix::preset(p).unwrap().with_requests(500)).unwrap();
        assert!(t.messages.iter().enumerate().all(|(i, m)| m.seq_id == i as u32), "{p}");
    }
    assert!(WorkloadMix::preset("nonsense").is_err());
}

#[test]
fn invalid_mixes_are_rejected() {
    let mut m = WorkloadMix::preset("memc_mid").unwrap();
    m.ops[0].ratio = 0.9;
    assert!(generate(&m).is_err());
    let mut k = WorkloadMix::preset("memc_tiny").unwrap();
    k.keyspace = 1_000_000_000;
    assert!(generate(&k).is_err());
}

#[test]
fn schedules_separate_timing_from_content() {
    let t = generate(&WorkloadMix::preset("memc_low").unwrap().with_requests(4)).unwrap();
    assert_eq!(offered_load(&t, LoadMode::ClosedLoop { window: 2 }), ArrivalSchedule::ClosedLoop { window: 2 });
    match offered_load(&t, LoadMode::FixedRate { rate_rps: 1_000_000 }) {
        ArrivalSchedule::Fixed(at) => assert_eq!(at, [0, 1, 2, 3].map(|i| SimTime(i * 1_000_000))),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generation_is_a_pure_function_of_mix_and_seed(seed in any::<u64>(), preset in 0usize..9) {
        let mix = WorkloadMix::preset(PRESETS[preset]).unwrap().with_requests(300).with_seed(seed);
        prop_assert_eq!(generate(&mix).unwrap().messages, generate(&mix).unwrap().messages);
    }

    #[test]
    fn keys_have_the_configured_size(seed in any::<u64>(), key in 5u32..40, value in 0u32..300) {
        let mut mix = WorkloadMix::memcached("custom", 0.5, key, value).with_requests(200).with_seed(seed);
        mix.keyspace = 10_000;
        for m in generate(&mix).unwrap().messages {
            prop_assert_eq!(m.fields[0].1.as_bytes().unwrap().len(), key as usize);
            if let Some(v) = m.field(2) {
                prop_assert_eq!(v.as_bytes().unwrap().len(), value as usize);
            }
        }
    }
}
