//! The accelerator: command words, snooping interface, dispatch, the engine
//! FSM and the per-stage engine cost model.

pub mod command;
pub mod dispatch;
pub mod fsm;
pub mod snoop;

use serde::{Deserialize, Serialize};

pub use command::{encode_command, Command, CommandError, CommandType, StatusCode, StatusWord};
pub use dispatch::{Descriptor, DispatchOutcome, Dispatcher, EngineId};
pub use fsm::{step_fsm, EngineFsm, FsmState, IllegalTransition, Trigger, LEGAL_EDGES};
pub use snoop::{BusAccess, Snooper, WatchRange};

use crate::wire::StageCosts;

/// Engine compute costs in accelerator cycles. Per-byte rates are in
/// milli-cycles so fractional rates stay integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineCosts {
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
    /// Outstanding loads the transmit engine keeps in flight when reading a
    /// response record.
    pub tx_load_mlp: u64,
    pub queue_depth: u32,
}

impl Default for EngineCosts {
    fn default() -> Self {
        EngineCosts {
            header_parse_base: 10,
            header_parse_mc_per_byte: 125,
            dispatch: 6,
            deser_base: 45,
            deser_per_item: 10,
            deser_mc_per_byte: 125,
            header_create: 8,
            ser_base: 4,
            ser_per_item: 1,
            ser_mc_per_byte: 32,
            tx_load_mlp: 8,
            queue_depth: dispatch::DEFAULT_QUEUE_DEPTH as u32,
        }
    }
}

fn milli(rate: u64, bytes: u32) -> u64 {
    (rate * bytes as u64).div_ceil(1000)
}

/// Compute-only cycles of the receive stages (memory time is added by the
/// caller from the memory model).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RxCycles {
    pub header_parse: u64,
    pub dispatch: u64,
    pub deserialize: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TxCycles {
    pub header_create: u64,
    pub serialize: u64,
}

impl EngineCosts {
    pub fn rx(&self, sc: &StageCosts) -> RxCycles {
        RxCycles {
            header_parse: self.header_parse_base + milli(self.header_parse_mc_per_byte, sc.header_bytes),
            dispatch: self.dispatch * sc.dispatch_lookups as u64,
            deserialize: self.deser_base
                + self.deser_per_item * sc.deser_items as u64
                + milli(self.deser_mc_per_byte, sc.deser_bytes),
        }
    }

    pub fn tx(&self, sc: &StageCosts) -> TxCycles {
        TxCycles {
            header_create: self.header_create,
            serialize: self.ser_base + self.ser_per_item * sc.ser_items as u64 + milli(self.ser_mc_per_byte, sc.ser_bytes),
        }
    }
}
