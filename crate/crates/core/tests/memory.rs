use std::collections::VecDeque;

use arcalis_core::mem::cache::{CacheGeometry, LruCache, LINE};
use arcalis_core::mem::tlb::{PageSize, Tlb};
use arcalis_core::mem::{buffer_base, AccessKind, Actor, BufferKind, LatencyConfig, MemConfig, MemorySystem};
use arcalis_core::mem::buffer::SharedBuffer;
use proptest::prelude::*;

/// Per-set recency lists; front is most recent.
struct OracleLru {
    sets: Vec<VecDeque<u64>>,
    ways: usize,
}

impl OracleLru {
    fn new(sets: usize, ways: usize) -> Self {
        OracleLru { sets: vec![VecDeque::new(); sets], ways }
    }

    fn access(&mut self, line: u64) -> (bool, Option<u64>) {
        let n = self.sets.len() as u64;
        let set = &mut self.sets[(line % n) as usize];
        if let Some(i) = set.iter().position(|&l| l == line) {
            set.remove(i);
            set.push_front(line);
            return (true, None);
        }
        set.push_front(line);
        let evicted = if set.len() > self.ways { set.pop_back() } else { None };
        (false, evicted)
    }
}

fn system(cfg: MemConfig) -> MemorySystem {
    MemorySystem::new(LatencyConfig::default(), cfg, 2)
}

#[test]
fn dca_places_every_line_in_the_llc() {
    let mut m = system(MemConfig::default());
    for (len, lines) in [(64usize, 1u64), (1518, 24), (65, 2)] {
        let before = m.stats.dca_lines;
        let (a, t) = m.dca_inject(&vec![0xab; len]).unwrap();
        assert_eq!(m.stats.dca_lines - before, lines);
        assert_eq!(t.0, LatencyConfig::default().dca_injection_ns * 1000);
        let base = m.buffer(BufferKind::NetRecv).vaddr(a.offset);
        for i in 0..lines {
            assert!(m.llc_contains(base + i * LINE));
        }
        assert_eq!(m.buffer(BufferKind::NetRecv).read(a.offset, len as u64), &vec![0xab; len][..]);
    }
}

#[test]
fn accel_load_of_injected_line_hits_llc_then_accel_cache() {
    let mut m = system(MemConfig::default());
    let (a, _) = m.dca_inject(&[1u8; 64]).unwrap();
    let v = m.buffer(BufferKind::NetRecv).vaddr(a.offset);
    assert!(!m.accel_cache_contains(v));
    let first = m.access(Actor::Accel, v, 64, AccessKind::Load).unwrap();
    assert!(m.accel_cache_contains(v));
    let second = m.access(Actor::Accel, v, 64, AccessKind::Load).unwrap();
    assert!(second.serial() < first.serial());
}

#[test]
fn dca_drops_when_netrecv_is_full() {
    let mut m = system(MemConfig { buffer_bytes: 4096, ..MemConfig::default() });
    let mut ok = 0;
    while m.dca_inject(&[0; 1000]).is_ok() {
        ok += 1;
    }
    assert_eq!(ok, 4096 / 1024);
    assert_eq!(m.stats.dca_drops, 1);
}

#[test]
fn unmapped_accel_access_faults_until_host_maps() {
    let mut m = system(MemConfig { prefault: false, ..MemConfig::default() });
    let v = buffer_base(BufferKind::AppRecv) + 3 * 4096;
    assert!(m.access(Actor::Accel, v, 8, AccessKind::Store).is_err());
    m.host_map(v);
    assert!(m.access(Actor::Accel, v, 8, AccessKind::Store).is_ok());
}

#[test]
fn repeated_address_trace_hits_at_least_as_often() {
    let mut m = system(MemConfig::default());
    let addrs: Vec<u64> = (0..2000u64).map(|i| buffer_base(BufferKind::AppResp) + (i * 7919 % 4000) * LINE).collect();
    let hits = |m: &MemorySystem| m.stats.l1_hits + m.stats.l2_hits + m.stats.llc_hits;
    for &a in &addrs {
        m.access(Actor::Cpu(0), a, 8, AccessKind::Load).unwrap();
    }
    let first = hits(&m);
    for &a in &addrs {
        m.access(Actor::Cpu(0), a, 8, AccessKind::Load).unwrap();
    }
    assert!(hits(&m) - first >= first);
}

proptest! {
    #[test]
    fn lru_cache_matches_oracle(lines in proptest::collection::vec(0u64..256, 1..600), ways in 1u32..5, sets_log in 0u32..4) {
        let sets = 1u64 << sets_log;
        let mut c = LruCache::new(CacheGeometry::new(sets * ways as u64 * LINE, ways));
        let mut o = OracleLru::new(sets as usize, ways as usize);
        for l in lines {
            let hit = c.touch(l);
            let evicted = if hit { None } else { c.insert(l) };
            prop_assert_eq!((hit, evicted), o.access(l));
            prop_assert!(c.resident_lines() as u64 <= sets * ways as u64);
        }
    }

    #[test]
    fn tlb_never_exceeds_capacity_and_hits_after_insert(vpns in proptest::collection::vec(0u64..200, 1..400), cap in 1usize..80) {
        let mut t = Tlb::new(cap);
        for v in vpns {
            let addr = v * 4096 + 17;
            if t.lookup(addr).is_none() {
                t.insert(PageSize::Small, v, v * 4096);
            }
            prop_assert!(t.len() <= cap);
            prop_assert_eq!(t.lookup(addr), Some((PageSize::Small, v * 4096)));
        }
    }

    #[test]
    fn buffer_allocations_are_disjoint(ops in proptest::collection::vec((any::<bool>(), 1u64..3000), 1..200)) {
        let mut b = SharedBuffer::new(BufferKind::AppResp, 0, 32 * 1024);
        let mut live: Vec<(u64, u64)> = Vec::new();
        for (alloc, len) in ops {
            if alloc || live.is_empty() {
                if let Some(a) = b.alloc(len) {
                    let end = a.offset + len.div_ceil(LINE) * LINE;
                    prop_assert_eq!(a.offset % LINE, 0);
                    prop_assert!(end <= b.capacity());
                    prop_assert!(live.iter().all(|&(o, e)| end <= o || a.offset >= e));
                    live.push((a.offset, end));
                }
            } else {
                let (o, _) = live.remove(len as usize % live.len());
                prop_assert!(b.free(o));
            }
            prop_assert_eq!(b.occupancy(), live.iter().map(|(o, e)| e - o).sum::<u64>());
        }
    }
}
