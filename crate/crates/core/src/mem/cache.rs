//! Set-associative cache of line tags with true LRU replacement.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const LINE: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheGeometry {
    pub capacity_bytes: u64,
    pub ways: u32,
    pub line_bytes: u64,
}

impl CacheGeometry {
    pub const fn new(capacity_bytes: u64, ways: u32) -> Self {
        CacheGeometry { capacity_bytes, ways, line_bytes: LINE }
    }

    pub fn sets(&self) -> u64 {
        self.capacity_bytes / (self.ways as u64 * self.line_bytes)
    }

    pub fn is_valid(&self) -> bool {
        self.ways > 0
            && self.line_bytes > 0
            && self.sets() > 0
            && self.sets() * self.ways as u64 * self.line_bytes == self.capacity_bytes
    }
}

const EMPTY: u64 = u64::MAX;

#[derive(Clone, Debug)]
pub struct LruCache {
    geom: CacheGeometry,
    sets: u64,
    tags: Vec<u64>,
    stamps: Vec<u64>,
    clock: u64,
}

impl LruCache {
    pub fn new(geom: CacheGeometry) -> Self {
        assert!(geom.is_valid(), "invalid cache geometry {geom:?}");
        let n = (geom.sets() * geom.ways as u64) as usize;
        LruCache { geom, sets: geom.sets(), tags: vec![EMPTY; n], stamps: vec![0; n], clock: 0 }
    }

    pub fn geometry(&self) -> CacheGeometry {
        self.geom
    }

    fn set_range(&self, line: u64) -> core::ops::Range<usize> {
        let set = (line % self.sets) as usize;
        let w = self.geom.ways as usize;
        set * w..set * w + w
    }

    fn find(&self, line: u64) -> Option<usize> {
        self.set_range(line).find(|&i| self.tags[i] == line)
    }

    pub fn contains(&self, line: u64) -> bool {
        self.find(line).is_some()
    }

    /// Look up `line`, refreshing its recency on a hit.
    pub fn touch(&mut self, line: u64) -> bool {
        match self.find(line) {
            Some(i) => {
                self.clock += 1;
                self.stamps[i] = self.clock;
                true
            }
            None => false,
        }
    }

    /// Install `line` as most recently used. Returns the evicted line, if any.
    pub fn insert(&mut self, line: u64) -> Option<u64> {
        self.clock += 1;
        if let Some(i) = self.find(line) {
            self.stamps[i] = self.clock;
            return None;
        }
        let range = self.set_range(line);
        let victim = range
            .clone()
            .find(|&i| self.tags[i] == EMPTY)
            .unwrap_or_else(|| range.min_by_key(|&i| self.stamps[i]).unwrap());
        let old = self.tags[victim];
        self.tags[victim] = line;
        self.stamps[victim] = self.clock;
        (old != EMPTY).then_some(old)
    }

    pub fn remove(&mut self, line: u64) -> bool {
        match self.find(line) {
            Some(i) => {
                self.tags[i] = EMPTY;
                self.stamps[i] = 0;
                true
            }
            None => false,
        }
    }

    pub fn resident_lines(&self) -> usize {
        self.tags.iter().filter(|&&t| t != EMPTY).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_derives_sets() {
        let g = CacheGeometry::new(512 * 1024, 8);
        assert_eq!(g.sets(), 1024);
        assert!(g.is_valid());
        assert!(!CacheGeometry::new(1000, 8).is_valid());
    }

    #[test]
    fn lru_victim_is_least_recent_in_set() {
        // Two sets, two ways: lines 0, 2, 4 map to set 0.
        let mut c = LruCache::new(CacheGeometry::new(256, 2));
        assert_eq!(c.insert(0), None);
        assert_eq!(c.insert(2), None);
        assert!(c.touch(0));
        assert_eq!(c.insert(4), Some(2));
        assert!(c.contains(0) && c.contains(4) && !c.contains(2));
    }

    #[test]
    fn remove_frees_a_way() {
        let mut c = LruCache::new(CacheGeometry::new(256, 2));
        c.insert(0);
        c.insert(2);
        assert!(c.remove(0));
        assert_eq!(c.insert(4), None);
        assert_eq!(c.resident_lines(), 2);
    }
}
