//! The four shared buffers. Each owns real byte storage and a first-fit
//! allocator with 64-byte granularity, so a small working set stays at the
//! low end of the buffer.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::cache::LINE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BufferKind {
    NetRecv,
    NetResp,
    AppRecv,
    AppResp,
}

impl BufferKind {
    pub const ALL: [BufferKind; 4] = [BufferKind::NetRecv, BufferKind::NetResp, BufferKind::AppRecv, BufferKind::AppResp];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            BufferKind::NetRecv => "net_recv",
            BufferKind::NetResp => "net_resp",
            BufferKind::AppRecv => "app_recv",
            BufferKind::AppResp => "app_resp",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SharedBuffer {
    pub kind: BufferKind,
    pub base: u64,
    capacity: u64,
    occupancy: u64,
    // offset -> reserved length (rounded to lines)
    live: BTreeMap<u64, u64>,
    data: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub offset: u64,
    pub len: u64,
}

impl SharedBuffer {
    pub fn new(kind: BufferKind, base: u64, capacity: u64) -> Self {
        assert_eq!(base % LINE, 0);
        SharedBuffer { kind, base, capacity, occupancy: 0, live: BTreeMap::new(), data: vec![0; capacity as usize] }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn occupancy(&self) -> u64 {
        self.occupancy
    }

    pub fn live_allocations(&self) -> usize {
        self.live.len()
    }

    pub fn contains(&self, vaddr: u64) -> bool {
        vaddr >= self.base && vaddr < self.base + self.capacity
    }

    /// Reserve `len` bytes at the lowest fitting line-aligned offset.
    pub fn alloc(&mut self, len: u64) -> Option<Allocation> {
        let need = len.max(1).div_ceil(LINE) * LINE;
        let mut cursor = 0;
        for (&off, &l) in &self.live {
            if off - cursor >= need {
                break;
            }
            cursor = off + l;
        }
        if cursor + need > self.capacity {
            return None;
        }
        self.live.insert(cursor, need);
        self.occupancy += need;
        Some(Allocation { offset: cursor, len })
    }

    pub fn free(&mut self, offset: u64) -> bool {
        match self.live.remove(&offset) {
            Some(l) => {
                self.occupancy -= l;
                true
            }
            None => false,
        }
    }

    pub fn write(&mut self, offset: u64, bytes: &[u8]) {
        let o = offset as usize;
        self.data[o..o + bytes.len()].copy_from_slice(bytes);
    }

    pub fn read(&self, offset: u64, len: u64) -> &[u8] {
        &self.data[offset as usize..(offset + len) as usize]
    }

    pub fn vaddr(&self, offset: u64) -> u64 {
        self.base + offset
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_fit_reuses_low_offsets() {
        let mut b = SharedBuffer::new(BufferKind::NetRecv, 0x1000, 1024);
        let a = b.alloc(100).unwrap();
        let c = b.alloc(10).unwrap();
        assert_eq!((a.offset, c.offset), (0, 128));
        assert!(b.free(a.offset));
        assert_eq!(b.alloc(64).unwrap().offset, 0);
        assert_eq!(b.occupancy(), 128);
    }

    #[test]
    fn full_buffer_refuses() {
        let mut b = SharedBuffer::new(BufferKind::AppRecv, 0, 256);
        assert!(b.alloc(200).is_some());
        assert!(b.alloc(64).is_none());
        assert_eq!(b.occupancy(), 256);
    }

    #[test]
    fn bytes_round_trip() {
        let mut b = SharedBuffer::new(BufferKind::AppResp, 0, 256);
        let a = b.alloc(5).unwrap();
        b.write(a.offset, b"hello");
        assert_eq!(b.read(a.offset, 5), b"hello");
    }
}
