//! Central dispatch: pairs address/length commands into descriptors, queues
//! them per engine and records parked UC loads.

use alloc::collections::VecDeque;

use super::command::CommandType;

pub const DEFAULT_QUEUE_DEPTH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Descriptor {
    pub addr: u64,
    pub len: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Partial {
    addr: Option<u64>,
    len: Option<u64>,
}

impl Partial {
    fn complete(&mut self) -> Option<Descriptor> {
        match (self.addr, self.len) {
            (Some(addr), Some(len)) => {
                *self = Partial::default();
                Some(Descriptor { addr, len })
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineId {
    Rx,
    Tx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DispatchOutcome {
    /// Half of a descriptor arrived.
    Partial,
    Queued(EngineId),
    /// The engine's queue was full; the descriptor is returned to the caller.
    Rejected(EngineId, Descriptor),
    Parked(CommandType),
}

#[derive(Clone, Debug)]
pub struct Dispatcher {
    depth: usize,
    net: Partial,
    app: Partial,
    pub rx_pending: VecDeque<Descriptor>,
    pub tx_pending: VecDeque<Descriptor>,
    pub rejected: u64,
}

impl Dispatcher {
    pub fn new(depth: usize) -> Self {
        Dispatcher {
            depth,
            net: Partial::default(),
            app: Partial::default(),
            rx_pending: VecDeque::new(),
            tx_pending: VecDeque::new(),
            rejected: 0,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dispatch(&mut self, op: CommandType, payload: u64) -> DispatchOutcome {
        let (partial, engine) = match op {
            CommandType::SendNetBuf => {
                self.net.addr = Some(payload);
                (&mut self.net, EngineId::Rx)
            }
            CommandType::SendNetLen => {
                self.net.len = Some(payload);
                (&mut self.net, EngineId::Rx)
            }
            CommandType::SendAppBuf => {
                self.app.addr = Some(payload);
                (&mut self.app, EngineId::Tx)
            }
            CommandType::SendAppResp => {
                self.app.len = Some(payload);
                (&mut self.app, EngineId::Tx)
            }
            flag @ (CommandType::AppReadyFlag | CommandType::DpdkNetFlag) => return DispatchOutcome::Parked(flag),
        };
        let Some(desc) = partial.complete() else {
            return DispatchOutcome::Partial;
        };
        let queue = match engine {
            EngineId::Rx => &mut self.rx_pending,
            EngineId::Tx => &mut self.tx_pending,
        };
        if queue.len() >= self.depth {
            self.rejected += 1;
            return DispatchOutcome::Rejected(engine, desc);
        }
        queue.push_back(desc);
        DispatchOutcome::Queued(engine)
    }

    pub fn pending(&self, engine: EngineId) -> &VecDeque<Descriptor> {
        match engine {
            EngineId::Rx => &self.rx_pending,
            EngineId::Tx => &self.tx_pending,
        }
    }

    pub fn pending_mut(&mut self, engine: EngineId) -> &mut VecDeque<Descriptor> {
        match engine {
            EngineId::Rx => &mut self.rx_pending,
            EngineId::Tx => &mut self.tx_pending,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buf_then_len_queues_rx_work() {
        let mut d = Dispatcher::new(DEFAULT_QUEUE_DEPTH);
        assert_eq!(d.dispatch(CommandType::SendNetBuf, 0x40), DispatchOutcome::Partial);
        assert_eq!(d.dispatch(CommandType::SendNetLen, 90), DispatchOutcome::Queued(EngineId::Rx));
        assert_eq!(d.rx_pending[0], Descriptor { addr: 0x40, len: 90 });
    }

    #[test]
    fn either_order_pairs() {
        let mut d = Dispatcher::new(DEFAULT_QUEUE_DEPTH);
        d.dispatch(CommandType::SendAppResp, 20);
        assert_eq!(d.dispatch(CommandType::SendAppBuf, 0x80), DispatchOutcome::Queued(EngineId::Tx));
        assert_eq!(d.tx_pending[0], Descriptor { addr: 0x80, len: 20 });
    }

    #[test]
    fn seventeenth_descriptor_is_rejected() {
        let mut d = Dispatcher::new(16);
        for i in 0..16 {
            d.dispatch(CommandType::SendNetBuf, i);
            assert_eq!(d.dispatch(CommandType::SendNetLen, 1), DispatchOutcome::Queued(EngineId::Rx));
        }
        d.dispatch(CommandType::SendNetBuf, 99);
        assert!(matches!(d.dispatch(CommandType::SendNetLen, 1), DispatchOutcome::Rejected(EngineId::Rx, _)));
        assert_eq!(d.rejected, 1);
        assert_eq!(d.rx_pending.len(), 16);
    }

    #[test]
    fn flags_park() {
        let mut d = Dispatcher::new(1);
        assert_eq!(d.dispatch(CommandType::AppReadyFlag, 0), DispatchOutcome::Parked(CommandType::AppReadyFlag));
    }
}
