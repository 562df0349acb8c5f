//! Host cores: software RPC cost model, host-side overheads, business logic
//! and the per-core counters the reports are built from.

pub mod logic;

use serde::{Deserialize, Serialize};

pub use logic::{BusinessLogic, LogicCosts, LogicError, LogicOutcome};

use crate::wire::StageCosts;

/// Software RPC stack costs in CPU cycles; per-byte rates in milli-cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpuRpcCosts {
    pub header_parse_base: u64,
    pub header_parse_mc_per_byte: u64,
    pub dispatch: u64,
    pub deser_base: u64,
    pub deser_per_item: u64,
    pub deser_mc_per_byte: u64,
    pub header_create: u64,
    pub ser_base: u64,
    pub ser_per_item: u64,
    pub ser_mc_per_byte: u64,
    /// Overlap factor for frame loads and stores issued by the software stack.
    pub frame_mlp: u64,
}

impl Default for CpuRpcCosts {
    fn default() -> Self {
        CpuRpcCosts {
            header_parse_base: 1400,
            header_parse_mc_per_byte: 2000,
            dispatch: 600,
            deser_base: 3400,
            deser_per_item: 100,
            deser_mc_per_byte: 4000,
            header_create: 900,
            ser_base: 3000,
            ser_per_item: 100,
            ser_mc_per_byte: 2000,
            frame_mlp: 1,
        }
    }
}

fn milli(rate: u64, bytes: u32) -> u64 {
    (rate * bytes as u64).div_ceil(1000)
}

impl CpuRpcCosts {
    pub fn header_parse(&self, sc: &StageCosts) -> u64 {
        self.header_parse_base + milli(self.header_parse_mc_per_byte, sc.header_bytes)
    }

    pub fn dispatch(&self, sc: &StageCosts) -> u64 {
        self.dispatch * sc.dispatch_lookups as u64
    }

    pub fn deserialize(&self, sc: &StageCosts) -> u64 {
        self.deser_base + self.deser_per_item * sc.deser_items as u64 + milli(self.deser_mc_per_byte, sc.deser_bytes)
    }

    pub fn header_create(&self, _sc: &StageCosts) -> u64 {
        self.header_create
    }

    pub fn serialize(&self, sc: &StageCosts) -> u64 {
        self.ser_base + self.ser_per_item * sc.ser_items as u64 + milli(self.ser_mc_per_byte, sc.ser_bytes)
    }

    pub fn zeroed() -> Self {
        CpuRpcCosts {
            header_parse_base: 0,
            header_parse_mc_per_byte: 0,
            dispatch: 0,
            deser_base: 0,
            deser_per_item: 0,
            deser_mc_per_byte: 0,
            header_create: 0,
            ser_base: 0,
            ser_per_item: 0,
            ser_mc_per_byte: 0,
            frame_mlp: 1,
        }
    }
}

/// Host-side costs outside the RPC stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HostCosts {
    /// NIC receive poll per packet.
    pub nic_rx_ns: u64,
    /// NIC transmit per packet.
    pub nic_tx_ns: u64,
    /// Core time to issue one posted UC store.
    pub uc_store_issue_ns: u64,
    /// AppCore record handling around the business logic.
    pub stub_base: u64,
    pub stub_per_item: u64,
    /// Overlap factor for record loads and stores on the AppCore.
    pub record_mlp: u64,
    /// NetCore bookkeeping per packet (descriptor setup, ring updates).
    pub net_per_packet: u64,
    /// Software queue hand-off between cores in the two-core baseline.
    pub handoff_ns: u64,
    /// Instructions per cycle by activity, in milli-instructions.
    pub codec_ipc_milli: u64,
    pub logic_ipc_milli: u64,
    pub stub_ipc_milli: u64,
}

impl Default for HostCosts {
    fn default() -> Self {
        HostCosts {
            nic_rx_ns: 50,
            nic_tx_ns: 50,
            uc_store_issue_ns: 5,
            stub_base: 100,
            stub_per_item: 10,
            record_mlp: 8,
            net_per_packet: 40,
            handoff_ns: 60,
            codec_ipc_milli: 2400,
            logic_ipc_milli: 1000,
            stub_ipc_milli: 1200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreRole {
    Net,
    App,
    Baseline,
}

impl CoreRole {
    pub fn name(self) -> &'static str {
        match self {
            CoreRole::Net => "net",
            CoreRole::App => "app",
            CoreRole::Baseline => "baseline",
        }
    }
}

/// Cycles per RPC stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCycles {
    pub header_parse: u64,
    pub dispatch: u64,
    pub deserialize: u64,
    pub logic: u64,
    pub header_create: u64,
    pub serialize: u64,
}

impl StageCycles {
    pub fn total(&self) -> u64 {
        self.header_parse + self.dispatch + self.deserialize + self.logic + self.header_create + self.serialize
    }

    pub fn codec(&self) -> u64 {
        self.total() - self.logic
    }

    pub fn add(&mut self, o: &StageCycles) {
        self.header_parse += o.header_parse;
        self.dispatch += o.dispatch;
        self.deserialize += o.deserialize;
        self.logic += o.logic;
        self.header_create += o.header_create;
        self.serialize += o.serialize;
    }
}

/// Counters of one simulated core, in CPU cycles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreCounters {
    pub stages: StageCycles,
    /// Record handling on the AppCore and descriptor handling on the NetCore.
    pub stub: u64,
    /// Issuing UC stores.
    pub uc: u64,
    /// NIC receive/transmit work.
    pub io: u64,
    /// Waiting on parked UC loads.
    pub stall: u64,
    pub requests: u64,
    /// Calls into the wire codec made by this core.
    pub codec_calls: u64,
}

impl CoreCounters {
    /// Busy cycles counted by the derived metrics: everything but NIC I/O and
    /// stalls on parked loads.
    pub fn active_cycles(&self) -> u64 {
        self.stages.total() + self.stub + self.uc
    }

    /// Instruction estimate: active cycles weighted by activity IPC.
    pub fn instructions(&self, h: &HostCosts) -> u64 {
        (self.stages.codec() * h.codec_ipc_milli
            + self.stages.logic * h.logic_ipc_milli
            + (self.stub + self.uc) * h.stub_ipc_milli)
            / 1000
    }

    pub fn busy_cycles(&self) -> u64 {
        self.active_cycles() + self.io
    }
}
