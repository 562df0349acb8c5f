//! Snooping command interface: UC accesses inside the watch range are
//! commands, everything else passes through.

use super::command::{Command, CommandError, CommandType};
use crate::mem::AccessKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WatchRange {
    pub base: u64,
    pub length: u64,
    pub pinned: bool,
}

impl WatchRange {
    pub fn contains(&self, paddr: u64) -> bool {
        paddr >= self.base && paddr - self.base < self.length
    }

    /// Address a UC load uses to wait on `flag`: one 8-byte slot per opcode.
    pub fn flag_address(&self, flag: CommandType) -> u64 {
        self.base + 8 * flag as u64
    }
}

impl Default for WatchRange {
    fn default() -> Self {
        WatchRange { base: 0xF000_0000, length: 4096, pinned: true }
    }
}

/// A memory access as seen on the interconnect.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BusAccess {
    pub paddr: u64,
    pub kind: AccessKind,
    pub uncacheable: bool,
    /// Store data; ignored for loads.
    pub data: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Snooper {
    pub range: WatchRange,
    pub recognized: u64,
    pub rejected: u64,
}

impl Snooper {
    pub fn new(range: WatchRange) -> Self {
        Snooper { range, recognized: 0, rejected: 0 }
    }

    /// `None` if the access is not a command. A UC store carries the command
    /// word as data; a UC load names its flag through the slot it reads.
    pub fn snoop(&mut self, access: BusAccess) -> Option<Result<Command, CommandError>> {
        if !access.uncacheable || !self.range.contains(access.paddr) {
            return None;
        }
        let cmd = match access.kind {
            AccessKind::Store => Command { raw: access.data },
            AccessKind::Load => Command { raw: (access.paddr - self.range.base) / 8 },
        };
        match cmd.decode() {
            Ok(_) => {
                self.recognized += 1;
                Some(Ok(cmd))
            }
            Err(e) => {
                self.rejected += 1;
                Some(Err(e))
            }
        }
    }
}
