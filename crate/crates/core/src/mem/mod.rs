//! Latency-class memory model.
//!
//! Caches hold physical line tags. Coherence is abstracted as migration: a
//! line lives in at most one private domain (one core's L1/L2, or the
//! accelerator cache) and a cross-domain access moves it, paying the LLC
//! latency. DCA writes place lines in the LLC and drop any private copies.

pub mod buffer;
pub mod cache;
pub mod tlb;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simkern::{cycles_to_time, SimTime};
pub use buffer::{Allocation, BufferKind, SharedBuffer};
pub use cache::{CacheGeometry, LruCache, LINE};
pub use tlb::{PageSize, PageTable, Tlb, HUGE_PAGE, SMALL_PAGE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyConfig {
    pub cpu_freq_hz: u64,
    pub accel_freq_hz: u64,
    pub l1_hit_cycles: u64,
    pub l2_hit_cycles: u64,
    pub llc_hit_cycles: u64,
    pub dram_ns: u64,
    pub accel_cache_hit_cycles: u64,
    pub uc_interconnect_ns: u64,
    pub tlb_hit_cycles: u64,
    pub page_walk_ns: u64,
    pub dca_injection_ns: u64,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        LatencyConfig {
            cpu_freq_hz: 4_000_000_000,
            accel_freq_hz: 1_000_000_000,
            l1_hit_cycles: 4,
            l2_hit_cycles: 14,
            llc_hit_cycles: 40,
            dram_ns: 90,
            accel_cache_hit_cycles: 2,
            uc_interconnect_ns: 40,
            tlb_hit_cycles: 1,
            page_walk_ns: 60,
            dca_injection_ns: 100,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("latencies must satisfy l1 < l2 < llc and llc < dram")]
    LatencyOrder,
    #[error("invalid {0} cache geometry")]
    Geometry(&'static str),
    #[error("{0}")]
    Invalid(&'static str),
}

impl LatencyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("cpu_freq_hz", self.cpu_freq_hz),
            ("accel_freq_hz", self.accel_freq_hz),
            ("l1_hit_cycles", self.l1_hit_cycles),
            ("l2_hit_cycles", self.l2_hit_cycles),
            ("llc_hit_cycles", self.llc_hit_cycles),
            ("dram_ns", self.dram_ns),
            ("accel_cache_hit_cycles", self.accel_cache_hit_cycles),
            ("uc_interconnect_ns", self.uc_interconnect_ns),
            ("tlb_hit_cycles", self.tlb_hit_cycles),
            ("page_walk_ns", self.page_walk_ns),
            ("dca_injection_ns", self.dca_injection_ns),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::NotPositive(name));
        }
        if !(self.l1_hit_cycles < self.l2_hit_cycles && self.l2_hit_cycles < self.llc_hit_cycles)
            || SimTime::from_ns(self.dram_ns) <= self.cpu_cycles(self.llc_hit_cycles)
        {
            return Err(ConfigError::LatencyOrder);
        }
        Ok(())
    }

    pub fn cpu_cycles(&self, n: u64) -> SimTime {
        cycles_to_time(n, self.cpu_freq_hz)
    }

    pub fn accel_cycles(&self, n: u64) -> SimTime {
        cycles_to_time(n, self.accel_freq_hz)
    }

    pub fn uc(&self) -> SimTime {
        SimTime::from_ns(self.uc_interconnect_ns)
    }
}

/// Structural parameters of the memory system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemConfig {
    pub l1_bytes: u64,
    pub l1_ways: u32,
    pub l2_bytes: u64,
    pub l2_ways: u32,
    pub llc_bytes: u64,
    pub llc_ways: u32,
    pub accel_cache_bytes: u64,
    pub accel_cache_ways: u32,
    pub tlb_entries: u32,
    pub page_size: PageSize,
    pub buffer_bytes: u64,
    /// Map the shared buffers before the run starts. When false, the host
    /// maps pages on first touch and accelerator accesses to untouched pages
    /// take the fault-and-retry path.
    pub prefault: bool,
    pub host_fault_ns: u64,
}

impl Default for MemConfig {
    fn default() -> Self {
        MemConfig {
            l1_bytes: 32 * 1024,
            l1_ways: 8,
            l2_bytes: 512 * 1024,
            l2_ways: 8,
            llc_bytes: 32 * 1024 * 1024,
            llc_ways: 16,
            accel_cache_bytes: 512 * 1024,
            accel_cache_ways: 8,
            tlb_entries: 64,
            page_size: PageSize::Small,
            buffer_bytes: 256 * 1024,
            prefault: true,
            host_fault_ns: 1_000,
        }
    }
}

impl MemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let geoms = [
            ("l1", CacheGeometry::new(self.l1_bytes, self.l1_ways)),
            ("l2", CacheGeometry::new(self.l2_bytes, self.l2_ways)),
            ("llc", CacheGeometry::new(self.llc_bytes, self.llc_ways)),
            ("accel", CacheGeometry::new(self.accel_cache_bytes, self.accel_cache_ways)),
        ];
        if let Some((name, _)) = geoms.iter().find(|(_, g)| !g.is_valid()) {
            return Err(ConfigError::Geometry(name));
        }
        if self.tlb_entries == 0 {
            return Err(ConfigError::NotPositive("tlb_entries"));
        }
        if self.buffer_bytes == 0 || self.buffer_bytes % LINE != 0 || self.buffer_bytes > BUFFER_STRIDE {
            return Err(ConfigError::Invalid("buffer_bytes must be a positive multiple of 64 up to 64 MiB"));
        }
        Ok(())
    }
}

/// Virtual layout: the four buffers sit 64 MiB apart from `BUFFER_BASE`;
/// service state lives at `HEAP_BASE` and above.
pub const BUFFER_BASE: u64 = 0x4000_0000;
pub const BUFFER_STRIDE: u64 = 0x0400_0000;
pub const HEAP_BASE: u64 = 0x1_0000_0000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Actor {
    Cpu(u8),
    Accel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessKind {
    Load,
    Store,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemError {
    #[error("page fault at {vaddr:#x}")]
    PageFault { vaddr: u64 },
    #[error("buffer {0:?} is full")]
    BufferFull(BufferKind),
}

/// Latency breakdown of one access.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Access {
    pub translation: SimTime,
    /// Sum of the per-line latencies.
    pub lines_total: SimTime,
    /// Slowest single line.
    pub line_max: SimTime,
    pub lines: u32,
}

impl Access {
    /// Fully serialized latency: translation plus every line in turn.
    pub fn serial(&self) -> SimTime {
        self.translation + self.lines_total
    }

    /// Latency when up to `mlp` line requests overlap: the slowest line plus
    /// the remainder divided by the overlap factor.
    pub fn overlapped(&self, mlp: u64) -> SimTime {
        let rest = self.lines_total.0 - self.line_max.0;
        self.translation + self.line_max + SimTime(rest.div_ceil(mlp.max(1)))
    }

    pub fn merge(self, o: Access) -> Access {
        Access {
            translation: self.translation + o.translation,
            lines_total: self.lines_total + o.lines_total,
            line_max: self.line_max.max(o.line_max),
            lines: self.lines + o.lines,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemStats {
    pub l1_hits: u64,
    pub l1_misses: u64,
    pub l2_hits: u64,
    pub l2_misses: u64,
    pub llc_hits: u64,
    pub llc_misses: u64,
    pub accel_hits: u64,
    pub accel_misses: u64,
    pub tlb_hits: u64,
    pub tlb_misses: u64,
    pub page_faults: u64,
    pub host_faults: u64,
    pub migrations: u64,
    pub dca_lines: u64,
    pub dca_bytes: u64,
    pub dca_drops: u64,
}

pub struct MemorySystem {
    pub lat: LatencyConfig,
    pub cfg: MemConfig,
    l1: Vec<LruCache>,
    l2: Vec<LruCache>,
    llc: LruCache,
    accel: LruCache,
    tlb: Tlb,
    page_table: PageTable,
    buffers: Vec<SharedBuffer>,
    pub stats: MemStats,
}

impl MemorySystem {
    pub fn new(lat: LatencyConfig, cfg: MemConfig, cores: usize) -> Self {
        let l1g = CacheGeometry::new(cfg.l1_bytes, cfg.l1_ways);
        let l2g = CacheGeometry::new(cfg.l2_bytes, cfg.l2_ways);
        let buffers: Vec<SharedBuffer> = BufferKind::ALL
            .iter()
            .map(|&k| SharedBuffer::new(k, buffer_base(k), cfg.buffer_bytes))
            .collect();
        let mut page_table = PageTable::new();
        for b in &buffers {
            // NetRecv is the NIC's pinned DMA region and is always mapped.
            if cfg.prefault || b.kind == BufferKind::NetRecv {
                page_table.map_range(b.base, b.capacity(), cfg.page_size);
            }
        }
        MemorySystem {
            lat,
            cfg,
            l1: (0..cores).map(|_| LruCache::new(l1g)).collect(),
            l2: (0..cores).map(|_| LruCache::new(l2g)).collect(),
            llc: LruCache::new(CacheGeometry::new(cfg.llc_bytes, cfg.llc_ways)),
            accel: LruCache::new(CacheGeometry::new(cfg.accel_cache_bytes, cfg.accel_cache_ways)),
            tlb: Tlb::new(cfg.tlb_entries as usize),
            page_table,
            buffers,
            stats: MemStats::default(),
        }
    }

    pub fn buffer(&self, kind: BufferKind) -> &SharedBuffer {
        &self.buffers[kind.index()]
    }

    pub fn buffer_mut(&mut self, kind: BufferKind) -> &mut SharedBuffer {
        &mut self.buffers[kind.index()]
    }

    pub fn page_table(&self) -> &PageTable {
        &self.page_table
    }

    /// Host-side page mapping, as done by the OS on a first touch.
    pub fn host_map(&mut self, vaddr: u64) {
        self.page_table.map(vaddr, self.cfg.page_size);
    }

    /// Translate `vaddr` for `actor`. The accelerator goes through its TLB and
    /// faults on unmapped pages; the host maps unmapped pages on first touch.
    pub fn translate(&mut self, actor: Actor, vaddr: u64) -> Result<(u64, SimTime), MemError> {
        match actor {
            Actor::Accel => {
                let hit = self.lat.accel_cycles(self.lat.tlb_hit_cycles);
                if let Some((size, pbase)) = self.tlb.lookup(vaddr) {
                    self.stats.tlb_hits += 1;
                    return Ok((pbase + vaddr % size.bytes(), hit));
                }
                let (size, vpn, pbase) =
                    self.page_table.lookup(vaddr).ok_or(MemError::PageFault { vaddr })?;
                self.stats.tlb_misses += 1;
                self.tlb.insert(size, vpn, pbase);
                Ok((pbase + vaddr % size.bytes(), hit + SimTime::from_ns(self.lat.page_walk_ns)))
            }
            Actor::Cpu(_) => {
                let mut extra = SimTime::ZERO;
                if self.page_table.lookup(vaddr).is_none() {
                    self.host_map(vaddr);
                    // Prefaulted address spaces are populated up front.
                    if !self.cfg.prefault {
                        self.stats.host_faults += 1;
                        extra = SimTime::from_ns(self.cfg.host_fault_ns);
                    }
                }
                let (size, _, pbase) = self.page_table.lookup(vaddr).expect("just mapped");
                Ok((pbase + vaddr % size.bytes(), extra))
            }
        }
    }

    /// Whether every page of `[vaddr, vaddr+size)` is mapped.
    pub fn is_mapped(&self, vaddr: u64, size: u64) -> Result<(), MemError> {
        let mut v = vaddr;
        let end = vaddr + size.max(1);
        while v < end {
            let (ps, _, _) = self.page_table.lookup(v).ok_or(MemError::PageFault { vaddr: v })?;
            v = (v / ps.bytes() + 1) * ps.bytes();
        }
        Ok(())
    }

    pub fn access(&mut self, actor: Actor, vaddr: u64, size: u64, _kind: AccessKind) -> Result<Access, MemError> {
        if actor == Actor::Accel {
            self.is_mapped(vaddr, size)?;
        }
        let mut acc = Access::default();
        let first = vaddr / LINE;
        let last = (vaddr + size.max(1) - 1) / LINE;
        let mut page: Option<(u64, u64)> = None; // (page base vaddr, physical base)
        for vline in first..=last {
            let v = (vline * LINE).max(vaddr);
            let ps = self.page_table.lookup(v).map(|p| p.0.bytes()).unwrap_or(self.cfg.page_size.bytes());
            let vpage = v / ps * ps;
            let pbase = match page {
                Some((vp, pb)) if vp == vpage => pb,
                _ => {
                    let (paddr, t) = self.translate(actor, v)?;
                    acc.translation += t;
                    let pb = paddr - (v - vpage);
                    page = Some((vpage, pb));
                    pb
                }
            };
            let pline = (pbase + (vline * LINE - vpage)) / LINE;
            let t = match actor {
                Actor::Cpu(c) => self.cpu_line(c as usize, pline),
                Actor::Accel => self.accel_line(pline),
            };
            acc.lines_total += t;
            acc.line_max = acc.line_max.max(t);
            acc.lines += 1;
        }
        Ok(acc)
    }

    fn drop_private(&mut self, pline: u64, except: Option<Actor>) -> bool {
        let mut found = false;
        for c in 0..self.l1.len() {
            if except == Some(Actor::Cpu(c as u8)) {
                continue;
            }
            found |= self.l1[c].remove(pline);
            found |= self.l2[c].remove(pline);
        }
        if except != Some(Actor::Accel) {
            found |= self.accel.remove(pline);
        }
        found
    }

    fn cpu_line(&mut self, c: usize, pline: u64) -> SimTime {
        let lat = self.lat;
        if self.l1[c].touch(pline) {
            self.stats.l1_hits += 1;
            return lat.cpu_cycles(lat.l1_hit_cycles);
        }
        self.stats.l1_misses += 1;
        if self.l2[c].touch(pline) {
            self.stats.l2_hits += 1;
            self.l1[c].insert(pline);
            return lat.cpu_cycles(lat.l1_hit_cycles + lat.l2_hit_cycles);
        }
        self.stats.l2_misses += 1;
        let chain = lat.cpu_cycles(lat.l1_hit_cycles + lat.l2_hit_cycles + lat.llc_hit_cycles);
        let t = if self.drop_private(pline, Some(Actor::Cpu(c as u8))) {
            self.stats.migrations += 1;
            self.stats.llc_hits += 1;
            self.llc.insert(pline);
            chain
        } else if self.llc.touch(pline) {
            self.stats.llc_hits += 1;
            chain
        } else {
            self.stats.llc_misses += 1;
            self.llc.insert(pline);
            chain + SimTime::from_ns(lat.dram_ns)
        };
        self.l2[c].insert(pline);
        self.l1[c].insert(pline);
        t
    }

    fn accel_line(&mut self, pline: u64) -> SimTime {
        let lat = self.lat;
        if self.accel.touch(pline) {
            self.stats.accel_hits += 1;
            return lat.accel_cycles(lat.accel_cache_hit_cycles);
        }
        self.stats.accel_misses += 1;
        let llc = lat.cpu_cycles(lat.llc_hit_cycles);
        let t = if self.drop_private(pline, Some(Actor::Accel)) {
            self.stats.migrations += 1;
            self.stats.llc_hits += 1;
            self.llc.insert(pline);
            llc
        } else if self.llc.touch(pline) {
            self.stats.llc_hits += 1;
            llc
        } else {
            self.stats.llc_misses += 1;
            self.llc.insert(pline);
            llc + SimTime::from_ns(lat.dram_ns)
        };
        self.accel.insert(pline);
        t
    }

    /// NIC delivery of one frame into NetRecv: the bytes are written and every
    /// line is made LLC-resident. DRAM is never touched.
    pub fn dca_inject(&mut self, frame: &[u8]) -> Result<(Allocation, SimTime), MemError> {
        let buf = &mut self.buffers[BufferKind::NetRecv.index()];
        let Some(a) = buf.alloc(frame.len() as u64) else {
            self.stats.dca_drops += 1;
            return Err(MemError::BufferFull(BufferKind::NetRecv));
        };
        buf.write(a.offset, frame);
        let base = buf.vaddr(a.offset);
        let lines = (frame.len() as u64).max(1).div_ceil(LINE);
        for i in 0..lines {
            let v = base + i * LINE;
            let (size, _, pbase) = self.page_table.lookup(v).expect("net_recv is pinned");
            let pline = (pbase + v % size.bytes()) / LINE;
            self.drop_private(pline, None);
            self.llc.insert(pline);
        }
        self.stats.dca_lines += lines;
        self.stats.dca_bytes += frame.len() as u64;
        Ok((a, SimTime::from_ns(self.lat.dca_injection_ns)))
    }

    pub fn llc_contains(&self, vaddr: u64) -> bool {
        match self.page_table.lookup(vaddr) {
            Some((size, _, pbase)) => self.llc.contains((pbase + vaddr % size.bytes()) / LINE),
            None => false,
        }
    }

    pub fn accel_cache_contains(&self, vaddr: u64) -> bool {
        match self.page_table.lookup(vaddr) {
            Some((size, _, pbase)) => self.accel.contains((pbase + vaddr % size.bytes()) / LINE),
            None => false,
        }
    }

    /// Remove a line from every cache so the next access goes to DRAM.
    pub fn evict_everywhere(&mut self, vaddr: u64) {
        if let Some((size, _, pbase)) = self.page_table.lookup(vaddr) {
            let pline = (pbase + vaddr % size.bytes()) / LINE;
            self.drop_private(pline, None);
            self.llc.remove(pline);
        }
    }

    pub fn tlb(&self) -> &Tlb {
        &self.tlb
    }
}

pub fn buffer_base(kind: BufferKind) -> u64 {
    BUFFER_BASE + kind.index() as u64 * BUFFER_STRIDE
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mem() -> MemorySystem {
        MemorySystem::new(LatencyConfig::default(), MemConfig::default(), 2)
    }

    #[test]
    fn defaults_validate() {
        LatencyConfig::default().validate().unwrap();
        MemConfig::default().validate().unwrap();
        let bad = LatencyConfig { l2_hit_cycles: 50, ..LatencyConfig::default() };
        assert_eq!(bad.validate(), Err(ConfigError::LatencyOrder));
    }

    #[test]
    fn dca_line_is_llc_resident_then_accel_resident() {
        let mut m = mem();
        let (a, t) = m.dca_inject(&[7u8; 64]).unwrap();
        assert_eq!(t, SimTime::from_ns(100));
        let v = m.buffer(BufferKind::NetRecv).vaddr(a.offset);
        assert!(m.llc_contains(v));
        let acc = m.access(Actor::Accel, v, 64, AccessKind::Load).unwrap();
        // TLB miss on first touch: 1 cycle + 60 ns walk; LLC hit 40 CPU cycles.
        assert_eq!(acc.translation, SimTime::from_ns(61));
        assert_eq!(acc.lines_total, SimTime::from_ns(10));
        assert!(m.accel_cache_contains(v));
        let again = m.access(Actor::Accel, v, 64, AccessKind::Load).unwrap();
        assert_eq!(again.serial(), SimTime::from_ns(1 + 2));
    }

    #[test]
    fn cpu_dram_miss_pays_full_chain() {
        let mut m = mem();
        let v = HEAP_BASE + 0x40;
        m.host_map(v);
        let acc = m.access(Actor::Cpu(0), v, 8, AccessKind::Load).unwrap();
        // (4 + 14 + 40) cycles at 4 GHz = 14.5 ns, plus 90 ns DRAM.
        assert_eq!(acc.serial(), SimTime::from_ps(14_500 + 90_000));
        let hit = m.access(Actor::Cpu(0), v, 8, AccessKind::Load).unwrap();
        assert_eq!(hit.serial(), SimTime::from_ps(1_000));
    }

    #[test]
    fn cross_actor_access_migrates() {
        let mut m = mem();
        let v = buffer_base(BufferKind::AppResp);
        m.access(Actor::Cpu(1), v, 64, AccessKind::Store).unwrap();
        let acc = m.access(Actor::Accel, v, 64, AccessKind::Load).unwrap();
        assert_eq!(acc.lines_total, SimTime::from_ns(10));
        assert_eq!(m.stats.migrations, 1);
        let back = m.access(Actor::Cpu(1), v, 64, AccessKind::Load).unwrap();
        assert_eq!(back.lines_total, SimTime::from_ps(14_500));
    }

    #[test]
    fn unmapped_accel_access_faults_without_state_change() {
        let cfg = MemConfig { prefault: false, ..MemConfig::default() };
        let mut m = MemorySystem::new(LatencyConfig::default(), cfg, 2);
        let v = buffer_base(BufferKind::AppRecv);
        assert_eq!(m.access(Actor::Accel, v, 64, AccessKind::Store), Err(MemError::PageFault { vaddr: v }));
        assert!(m.page_table().lookup(v).is_none());
        m.access(Actor::Cpu(1), v, 1, AccessKind::Load).unwrap();
        assert!(m.access(Actor::Accel, v, 64, AccessKind::Store).is_ok());
    }

    #[test]
    fn full_net_recv_drops() {
        let cfg = MemConfig { buffer_bytes: 128, ..MemConfig::default() };
        let mut m = MemorySystem::new(LatencyConfig::default(), cfg, 2);
        m.dca_inject(&[0; 100]).unwrap();
        assert_eq!(m.dca_inject(&[0; 10]), Err(MemError::BufferFull(BufferKind::NetRecv)));
        assert_eq!(m.stats.dca_drops, 1);
        assert_eq!(m.buffer(BufferKind::NetRecv).occupancy(), 128);
    }

    #[test]
    fn overlap_formula() {
        let a = Access {
            translation: SimTime(0),
            lines_total: SimTime(400),
            line_max: SimTime(100),
            lines: 4,
        };
        assert_eq!(a.overlapped(1), SimTime(400));
        assert_eq!(a.overlapped(3), SimTime(200));
    }
}
