//! Every tunable cost constant in one versioned structure.

use serde::{Deserialize, Serialize};

use crate::accel::EngineCosts;
use crate::cores::{CpuRpcCosts, HostCosts, LogicCosts};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Calibration {
    pub engine: EngineCosts,
    pub cpu: CpuRpcCosts,
    pub logic: LogicCosts,
    pub host: HostCosts,
}

impl Calibration {
    /// Identical to the shipped `calibration.default` profile.
    pub fn shipped() -> Self {
        Calibration::default()
    }

    /// Shipped profile with every RPC-processing cost removed, on the CPU,
    /// in the engines and in the AppCore stub. Business logic is kept.
    pub fn null_rpc() -> Self {
        let mut c = Calibration::default();
        c.cpu = CpuRpcCosts::zeroed();
        c.engine = EngineCosts {
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
            ..c.engine
        };
        c.host.stub_base = 0;
        c.host.stub_per_item = 0;
        c
    }
}
