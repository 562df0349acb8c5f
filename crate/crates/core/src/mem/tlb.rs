//! Page table with 4 KiB and 2 MiB pages and a fully associative LRU TLB.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const SMALL_PAGE: u64 = 4 * 1024;
pub const HUGE_PAGE: u64 = 2 * 1024 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageSize {
    Small,
    Huge,
}

impl PageSize {
    pub const fn bytes(self) -> u64 {
        match self {
            PageSize::Small => SMALL_PAGE,
            PageSize::Huge => HUGE_PAGE,
        }
    }
}

/// Virtual page (size class plus page number) to physical base address.
#[derive(Clone, Debug, Default)]
pub struct PageTable {
    small: BTreeMap<u64, u64>,
    huge: BTreeMap<u64, u64>,
    next_frame: u64,
}

impl PageTable {
    pub fn new() -> Self {
        // Physical memory starts above zero so paddr 0 never appears.
        PageTable { small: BTreeMap::new(), huge: BTreeMap::new(), next_frame: HUGE_PAGE }
    }

    pub fn lookup(&self, vaddr: u64) -> Option<(PageSize, u64, u64)> {
        if let Some(&p) = self.huge.get(&(vaddr / HUGE_PAGE)) {
            return Some((PageSize::Huge, vaddr / HUGE_PAGE, p));
        }
        self.small.get(&(vaddr / SMALL_PAGE)).map(|&p| (PageSize::Small, vaddr / SMALL_PAGE, p))
    }

    /// Map the page containing `vaddr`; no-op if already mapped.
    pub fn map(&mut self, vaddr: u64, size: PageSize) {
        if self.lookup(vaddr).is_some() {
            return;
        }
        let bytes = size.bytes();
        self.next_frame = self.next_frame.div_ceil(bytes) * bytes;
        let frame = self.next_frame;
        self.next_frame += bytes;
        match size {
            PageSize::Small => self.small.insert(vaddr / SMALL_PAGE, frame),
            PageSize::Huge => self.huge.insert(vaddr / HUGE_PAGE, frame),
        };
    }

    pub fn map_range(&mut self, base: u64, len: u64, size: PageSize) {
        let bytes = size.bytes();
        let mut v = base / bytes * bytes;
        while v < base + len {
            self.map(v, size);
            v += bytes;
        }
    }

    pub fn mapped_pages(&self) -> usize {
        self.small.len() + self.huge.len()
    }
}

#[derive(Clone, Debug)]
pub struct Tlb {
    capacity: usize,
    // (size class, vpn, physical base, last use)
    entries: Vec<(PageSize, u64, u64, u64)>,
    clock: u64,
}

impl Tlb {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Tlb { capacity, entries: Vec::with_capacity(capacity), clock: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Physical base of the page holding `vaddr` if cached.
    pub fn lookup(&mut self, vaddr: u64) -> Option<(PageSize, u64)> {
        self.clock += 1;
        let clock = self.clock;
        self.entries
            .iter_mut()
            .find(|e| e.1 == vaddr / e.0.bytes())
            .map(|e| {
                e.3 = clock;
                (e.0, e.2)
            })
    }

    /// Install a translation, evicting the least recently used entry when
    /// full. Returns the evicted vpn.
    pub fn insert(&mut self, size: PageSize, vpn: u64, pbase: u64) -> Option<(PageSize, u64)> {
        self.clock += 1;
        let mut evicted = None;
        if self.entries.len() == self.capacity {
            let (i, _) = self.entries.iter().enumerate().min_by_key(|(_, e)| e.3).unwrap();
            let e = self.entries.swap_remove(i);
            evicted = Some((e.0, e.1));
        }
        self.entries.push((size, vpn, pbase, self.clock));
        evicted
    }

    pub fn invalidate(&mut self, size: PageSize, vpn: u64) {
        self.entries.retain(|e| !(e.0 == size && e.1 == vpn));
    }

    pub fn contains(&self, size: PageSize, vpn: u64) -> bool {
        self.entries.iter().any(|e| e.0 == size && e.1 == vpn)
    }
}
