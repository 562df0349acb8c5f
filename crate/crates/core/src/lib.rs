//! Deterministic discrete-event model of a near-cache RPC accelerator.
//!
//! The crate is `no_std` (with `alloc`) and carries the whole simulation:
//! kernel, wire codec, memory model, accelerator, host cores, workloads and
//! metrics. File formats, the CLI and sweeps live in `arcalis-sim`.

#![no_std]

extern crate alloc;

pub mod accel;
pub mod calibration;
pub mod cores;
pub mod mem;
pub mod metrics;
pub mod record;
pub mod rng;
pub mod simkern;
pub mod system;
pub mod wire;
pub mod workload;
