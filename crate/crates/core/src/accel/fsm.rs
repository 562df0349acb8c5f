//! Five-state engine FSM shared by the receive and transmit engines.

use alloc::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FsmState {
    IdleRecv,
    Busy,
    Drain,
    Done,
    IdleResp,
}

impl FsmState {
    pub fn name(self) -> &'static str {
        match self {
            FsmState::IdleRecv => "IDLE_RECV",
            FsmState::Busy => "BUSY",
            FsmState::Drain => "DRAIN",
            FsmState::Done => "DONE",
            FsmState::IdleResp => "IDLE_RESP",
        }
    }

    pub fn is_idle(self) -> bool {
        matches!(self, FsmState::IdleRecv | FsmState::IdleResp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Trigger {
    ValidRequest,
    WorkDone,
    MemDrained,
    CleanupDone,
    MoreWork,
    NoWork,
}

impl Trigger {
    pub fn name(self) -> &'static str {
        match self {
            Trigger::ValidRequest => "valid_request",
            Trigger::WorkDone => "work_done",
            Trigger::MemDrained => "mem_drained",
            Trigger::CleanupDone => "cleanup_done",
            Trigger::MoreWork => "more_work",
            Trigger::NoWork => "no_work",
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("illegal transition {from:?} --{trigger:?}-->")]
pub struct IllegalTransition {
    pub from: FsmState,
    pub trigger: Trigger,
}

/// The legal edges, as (from, trigger, to).
pub const LEGAL_EDGES: [(FsmState, Trigger, FsmState); 7] = [
    (FsmState::IdleRecv, Trigger::ValidRequest, FsmState::Busy),
    (FsmState::Busy, Trigger::WorkDone, FsmState::Drain),
    (FsmState::Busy, Trigger::WorkDone, FsmState::Done),
    (FsmState::Drain, Trigger::MemDrained, FsmState::Done),
    (FsmState::Done, Trigger::MoreWork, FsmState::IdleResp),
    (FsmState::Done, Trigger::NoWork, FsmState::IdleRecv),
    (FsmState::IdleResp, Trigger::ValidRequest, FsmState::Busy),
];

/// Pure transition function. `in_flight` only matters for `work_done`.
/// `cleanup_done` is accepted in DONE as a no-op: cleanup is folded into the
/// DONE state itself, so it never changes state and is not an edge.
pub fn step_fsm(state: FsmState, trigger: Trigger, in_flight: u32) -> Result<FsmState, IllegalTransition> {
    use FsmState::*;
    use Trigger::*;
    Ok(match (state, trigger) {
        (IdleRecv | IdleResp, ValidRequest) => Busy,
        (Busy, WorkDone) if in_flight > 0 => Drain,
        (Busy, WorkDone) => Done,
        (Drain, MemDrained) => Done,
        (Done, CleanupDone) => Done,
        (Done, MoreWork) => IdleResp,
        (Done, NoWork) => IdleRecv,
        _ => return Err(IllegalTransition { from: state, trigger }),
    })
}

pub fn is_legal(edge: (FsmState, Trigger, FsmState)) -> bool {
    LEGAL_EDGES.contains(&edge)
}

/// Engine state plus a log of every transition taken.
#[derive(Clone, Debug, Default)]
pub struct EngineFsm {
    state: Option<FsmState>,
    pub transitions: BTreeMap<(FsmState, Trigger, FsmState), u64>,
}

impl EngineFsm {
    pub fn new() -> Self {
        EngineFsm { state: Some(FsmState::IdleRecv), transitions: BTreeMap::new() }
    }

    pub fn state(&self) -> FsmState {
        self.state.unwrap_or(FsmState::IdleRecv)
    }

    pub fn fire(&mut self, trigger: Trigger, in_flight: u32) -> Result<FsmState, IllegalTransition> {
        let from = self.state();
        let to = step_fsm(from, trigger, in_flight)?;
        if trigger == Trigger::CleanupDone {
            return Ok(to);
        }
        *self.transitions.entry((from, trigger, to)).or_insert(0) += 1;
        self.state = Some(to);
        Ok(to)
    }
}
