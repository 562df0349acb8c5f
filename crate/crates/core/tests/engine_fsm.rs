use arcalis_core::accel::command::PAYLOAD_MAX;
use arcalis_core::accel::fsm::is_legal;
use arcalis_core::accel::{
    encode_command, step_fsm, CommandType, DispatchOutcome, Dispatcher, EngineFsm, FsmState, StatusCode, StatusWord,
    Trigger, LEGAL_EDGES,
};
use proptest::prelude::*;

const STATES: [FsmState; 5] = [FsmState::IdleRecv, FsmState::Busy, FsmState::Drain, FsmState::Done, FsmState::IdleResp];
const TRIGGERS: [Trigger; 6] = [
    Trigger::ValidRequest,
    Trigger::WorkDone,
    Trigger::MemDrained,
    Trigger::CleanupDone,
    Trigger::MoreWork,
    Trigger::NoWork,
];

#[test]
fn transition_table_matches_edge_list() {
    let mut accepted = 0;
    for s in STATES {
        for t in TRIGGERS {
            for in_flight in [0, 3] {
                if let Ok(to) = step_fsm(s, t, in_flight) {
                    if t == Trigger::CleanupDone {
                        assert_eq!((s, to), (FsmState::Done, FsmState::Done));
                    } else {
                        assert!(is_legal((s, t, to)), "{s:?} {t:?} -> {to:?}");
                        accepted += 1;
                    }
                }
            }
        }
    }
    // every edge is reachable; busy/work_done splits on in_flight
    assert_eq!(accepted, 2 * LEGAL_EDGES.len() - 2);
    assert_eq!(step_fsm(FsmState::Busy, Trigger::WorkDone, 3), Ok(FsmState::Drain));
    assert_eq!(step_fsm(FsmState::Busy, Trigger::WorkDone, 0), Ok(FsmState::Done));
}

#[test]
fn command_words_pack_payload_above_opcode() {
    let c = encode_command(0x1234, CommandType::SendAppBuf).unwrap();
    assert_eq!(c.raw, 0x12345);
    assert!(encode_command(PAYLOAD_MAX + 1, CommandType::SendNetBuf).is_err());
}

#[test]
fn dispatcher_rejects_beyond_depth() {
    let mut d = Dispatcher::new(2);
    let mut rejected = 0;
    for i in 0..4u64 {
        let _ = d.dispatch(CommandType::SendNetBuf, 0x1000 + i * 64);
        if let DispatchOutcome::Rejected(..) = d.dispatch(CommandType::SendNetLen, 64) {
            rejected += 1;
        }
    }
    assert_eq!(rejected, 2);
}

proptest! {
    #[test]
    fn random_trigger_walks_only_log_legal_edges(steps in proptest::collection::vec((0usize..6, 0u32..4), 0..300)) {
        let mut fsm = EngineFsm::new();
        for (t, inflight) in steps {
            let before = fsm.state();
            match fsm.fire(TRIGGERS[t], inflight) {
                Ok(_) => {}
                Err(e) => prop_assert_eq!((e.from, fsm.state()), (before, before)),
            }
        }
        for edge in fsm.transitions.keys() {
            prop_assert!(is_legal(*edge));
        }
    }

    #[test]
    fn command_words_round_trip(payload in 0u64..=PAYLOAD_MAX, op in 0usize..6) {
        let op = CommandType::ALL[op];
        let c = encode_command(payload, op).unwrap();
        prop_assert_eq!(c.decode().unwrap(), (payload, op));
        prop_assert_eq!(c.raw >> 4, payload);
    }

    #[test]
    fn status_words_round_trip(count in any::<u32>().prop_map(|c| c >> 4), op in 0usize..6, vpn in 0u64..1 << 36, slot in any::<u16>()) {
        let ready = StatusWord::Ready { flag: CommandType::ALL[op], count };
        prop_assert_eq!(StatusWord::decode(ready.encode()).unwrap(), ready);
        let err = StatusWord::Error { code: StatusCode::PageFault, slot: slot as u32, vpn };
        prop_assert_eq!(StatusWord::decode(err.encode()).unwrap(), err);
        prop_assert_eq!(err.encode() & 0xF, 0);
    }
}
