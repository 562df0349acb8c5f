//! Discrete-event kernel: picosecond time base, a totally ordered event
//! queue and an optional event trace.
//!
//! Events are ordered by `(fire_at, seq)` where `seq` is a per-kernel
//! insertion counter, so simultaneous events are delivered in the order they
//! were scheduled. The kernel itself is payload-agnostic; the model that owns
//! it drives the loop with [`Kernel::run_until`] or [`Kernel::next_event`].

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use thiserror::Error;

const PS_PER_SECOND: u128 = 1_000_000_000_000;

/// Simulated time in picoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * 1_000)
    }

    pub const fn ps(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / PS_PER_SECOND as f64
    }

    pub fn as_ns_f64(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl core::ops::Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl core::ops::AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl core::ops::Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ps", self.0)
    }
}

/// A named clock. Cycle counts convert to time by rounding up, so an
/// operation never completes earlier than its cycle count implies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClockDomain {
    pub name: String,
    pub frequency_hz: u64,
}

impl ClockDomain {
    pub fn new(name: impl Into<String>, frequency_hz: u64) -> Result<Self, SimError> {
        if frequency_hz == 0 {
            return Err(SimError::ZeroFrequency);
        }
        Ok(ClockDomain { name: name.into(), frequency_hz })
    }

    pub fn cycles_to_time(&self, cycles: u64) -> SimTime {
        cycles_to_time(cycles, self.frequency_hz)
    }

    /// Whole cycles elapsed in `t`, rounded up.
    pub fn time_to_cycles(&self, t: SimTime) -> u64 {
        let num = t.0 as u128 * self.frequency_hz as u128;
        num.div_ceil(PS_PER_SECOND) as u64
    }
}

/// `ceil(n * 10^12 / frequency_hz)` picoseconds.
pub fn cycles_to_time(cycles: u64, frequency_hz: u64) -> SimTime {
    debug_assert!(frequency_hz > 0);
    let ps = (cycles as u128 * PS_PER_SECOND).div_ceil(frequency_hz as u128);
    SimTime(ps as u64)
}

/// Index of a registered actor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorId(pub u16);

/// Payloads expose a short stable name for the event trace.
pub trait EventKind {
    fn kind(&self) -> &'static str;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimEvent<E> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub target: ActorId,
    pub payload: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.0.seq == other.0.seq
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    // Reversed so that `BinaryHeap` pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.fire_at.cmp(&self.0.fire_at).then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

struct Scheduled<E>(SimEvent<E>);

/// One line of the event trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub actor: ActorId,
    pub kind: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunLimit {
    Until(SimTime),
    Quiescence,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("event scheduled in the past: fire_at={fire_at} now={now}")]
    PastEvent { fire_at: SimTime, now: SimTime },
    #[error("unknown actor {0:?}")]
    UnknownActor(ActorId),
    #[error("clock frequency must be positive")]
    ZeroFrequency,
}

pub struct Kernel<E> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Scheduled<E>>,
    actors: Vec<String>,
    trace: Option<Vec<TraceRecord>>,
    processed: u64,
    last_processed: SimTime,
}

impl<E: EventKind> Default for Kernel<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: EventKind> Kernel<E> {
    pub fn new() -> Self {
        Kernel {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            actors: Vec::new(),
            trace: None,
            processed: 0,
            last_processed: SimTime::ZERO,
        }
    }

    pub fn register_actor(&mut self, name: impl Into<String>) -> ActorId {
        let id = ActorId(self.actors.len() as u16);
        self.actors.push(name.into());
        id
    }

    pub fn actor_name(&self, id: ActorId) -> &str {
        self.actors.get(id.0 as usize).map(String::as_str).unwrap_or("?")
    }

    pub fn actor_count(&self) -> usize {
        self.actors.len()
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceRecord>> {
        self.trace.take()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Enqueue `payload` for `target` at `fire_at`. Scheduling in the past is
    /// a model bug and is reported as an error.
    pub fn schedule(&mut self, fire_at: SimTime, target: ActorId, payload: E) -> Result<u64, SimError> {
        if fire_at < self.now {
            return Err(SimError::PastEvent { fire_at, now: self.now });
        }
        if target.0 as usize >= self.actors.len() {
            return Err(SimError::UnknownActor(target));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Scheduled(SimEvent { fire_at, seq, target, payload }));
        Ok(seq)
    }

    /// Schedule relative to the current time.
    pub fn schedule_in(&mut self, delay: SimTime, target: ActorId, payload: E) -> Result<u64, SimError> {
        self.schedule(self.now + delay, target, payload)
    }

    /// Pop the next event, advancing time, unless it lies beyond `limit`.
    pub fn next_event(&mut self, limit: RunLimit) -> Option<SimEvent<E>> {
        let head = self.queue.peek()?;
        if let RunLimit::Until(t) = limit {
            if head.0.fire_at > t {
                return None;
            }
        }
        let Scheduled(ev) = self.queue.pop()?;
        debug_assert!(ev.fire_at >= self.now);
        self.now = ev.fire_at;
        self.last_processed = ev.fire_at;
        self.processed += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRecord { time: ev.fire_at, actor: ev.target, kind: ev.payload.kind() });
        }
        Some(ev)
    }

    /// Deliver events to `handler` until the limit is reached or the queue
    /// drains. Returns the time of the last processed event (zero if none).
    pub fn run_until<F, Err>(&mut self, limit: RunLimit, mut handler: F) -> Result<SimTime, Err>
    where
        F: FnMut(&mut Self, SimEvent<E>) -> Result<(), Err>,
    {
        while let Some(ev) = self.next_event(limit) {
            handler(self, ev)?;
        }
        Ok(self.last_processed)
    }

    pub fn last_processed(&self) -> SimTime {
        self.last_processed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    struct Tag(u32);

    impl EventKind for Tag {
        fn kind(&self) -> &'static str {
            "tag"
        }
    }

    fn kernel() -> (Kernel<Tag>, ActorId) {
        let mut k = Kernel::new();
        let a = k.register_actor("a");
        (k, a)
    }

    fn drain(k: &mut Kernel<Tag>) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        k.run_until(RunLimit::Quiescence, |_, ev| {
            out.push((ev.fire_at.ps(), ev.payload.0));
            Ok::<_, ()>(())
        })
        .unwrap();
        out
    }

    #[test]
    fn earlier_event_fires_first() {
        let (mut k, a) = kernel();
        k.schedule(SimTime(100), a, Tag(1)).unwrap();
        k.schedule(SimTime(50), a, Tag(2)).unwrap();
        assert_eq!(drain(&mut k), vec![(50, 2), (100, 1)]);
    }

    #[test]
    fn simultaneous_events_keep_insertion_order() {
        let (mut k, a) = kernel();
        k.schedule(SimTime(100), a, Tag(1)).unwrap();
        k.schedule(SimTime(100), a, Tag(2)).unwrap();
        assert_eq!(drain(&mut k), vec![(100, 1), (100, 2)]);
    }

    #[test]
    fn past_event_is_rejected() {
        let (mut k, a) = kernel();
        k.schedule(SimTime(20), a, Tag(0)).unwrap();
        k.next_event(RunLimit::Quiescence).unwrap();
        let err = k.schedule(SimTime(10), a, Tag(1)).unwrap_err();
        assert_eq!(err, SimError::PastEvent { fire_at: SimTime(10), now: SimTime(20) });
    }

    #[test]
    fn unknown_actor_is_rejected() {
        let (mut k, _) = kernel();
        assert!(matches!(k.schedule(SimTime(0), ActorId(9), Tag(0)), Err(SimError::UnknownActor(_))));
    }

    #[test]
    fn empty_run_returns_zero() {
        let (mut k, _) = kernel();
        assert_eq!(drain(&mut k), vec![]);
        assert_eq!(k.last_processed(), SimTime::ZERO);
    }

    #[test]
    fn single_event_run_returns_its_time() {
        let (mut k, a) = kernel();
        k.schedule(SimTime(500), a, Tag(0)).unwrap();
        let t = k.run_until(RunLimit::Quiescence, |_, _| Ok::<_, ()>(())).unwrap();
        assert_eq!(t, SimTime(500));
    }

    #[test]
    fn limit_stops_before_later_events() {
        let (mut k, a) = kernel();
        k.schedule(SimTime(10), a, Tag(0)).unwrap();
        k.schedule(SimTime(30), a, Tag(1)).unwrap();
        let t = k.run_until(RunLimit::Until(SimTime(20)), |_, _| Ok::<_, ()>(())).unwrap();
        assert_eq!(t, SimTime(10));
        assert_eq!(k.pending(), 1);
    }

    #[test]
    fn handler_can_schedule_follow_ups() {
        let (mut k, a) = kernel();
        k.schedule(SimTime(0), a, Tag(3)).unwrap();
        let mut seen = Vec::new();
        k.run_until(RunLimit::Quiescence, |k, ev| {
            seen.push(ev.payload.0);
            if ev.payload.0 > 0 {
                k.schedule_in(SimTime(7), a, Tag(ev.payload.0 - 1)).unwrap();
            }
            Ok::<_, ()>(())
        })
        .unwrap();
        assert_eq!(seen, vec![3, 2, 1, 0]);
        assert_eq!(k.now(), SimTime(21));
    }

    #[test]
    fn cycle_conversion_rounds_up() {
        assert_eq!(cycles_to_time(4, 4_000_000_000), SimTime(1000));
        assert_eq!(cycles_to_time(1, 1_000_000_000), SimTime(1000));
        // 3 * 10^12 / 4e9 = 750 exactly.
        assert_eq!(cycles_to_time(3, 4_000_000_000), SimTime(750));
        // 1 cycle at 3 GHz is 333.33.. ps; rounding up gives 334.
        assert_eq!(cycles_to_time(1, 3_000_000_000), SimTime(334));
    }

    #[test]
    fn zero_frequency_domain_is_rejected() {
        assert_eq!(ClockDomain::new("x", 0), Err(SimError::ZeroFrequency));
    }

    #[test]
    fn trace_records_every_event() {
        let (mut k, a) = kernel();
        k.enable_trace();
        k.schedule(SimTime(5), a, Tag(0)).unwrap();
        k.schedule(SimTime(5), a, Tag(1)).unwrap();
        drain(&mut k);
        let trace = k.trace().unwrap();
        assert_eq!(trace.len(), 2);
        assert!(trace.iter().all(|r| r.kind == "tag" && r.time == SimTime(5)));
    }
}
