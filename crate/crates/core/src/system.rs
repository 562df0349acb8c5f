//! Whole-system simulation: NIC, cores, accelerator and memory on one event
//! kernel, in either the accelerated or the CPU-only configuration.
//!
//! Accelerated mode follows the per-core loops: the NetCore receives packets,
//! posts `SEND_NET_BUF`/`SEND_NET_LEN` and waits on `DPDK_NET_FLAG`; the
//! AppCore waits on `APP_READY_FLAG`, runs the business logic on the
//! flattened record and posts `SEND_APP_BUF`/`SEND_APP_RESP`. UC stores are
//! posted; a UC load is a full round trip over the interconnect.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accel::{
    encode_command, BusAccess, CommandType, DispatchOutcome, Dispatcher, EngineFsm, EngineId, FsmState,
    IllegalTransition, Snooper, StatusCode, StatusWord, Trigger, WatchRange,
};
use crate::calibration::Calibration;
use crate::cores::{BusinessLogic, CoreCounters, CoreRole, StageCycles};
use crate::mem::{
    AccessKind, Actor, Allocation, BufferKind, ConfigError, LatencyConfig, MemConfig, MemError, MemStats,
    MemorySystem,
};
use crate::record::{decode_record, encode_record, record_seq};
use crate::simkern::{cycles_to_time, ActorId, EventKind, Kernel, RunLimit, SimError, SimTime, TraceRecord};
use crate::wire::{
    parse_header, serialize_error, stage_costs, Codec, ErrorCode, RpcMessage, ServiceSchema, WireError,
    DEFAULT_MAX_PAYLOAD,
};
use crate::workload::{LoadMode, RequestTrace, WorkloadMix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Baseline,
    #[default]
    Arcalis,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Arcalis => "arcalis",
        }
    }

    pub fn from_name(s: &str) -> Option<Mode> {
        match s {
            "baseline" => Some(Mode::Baseline),
            "arcalis" => Some(Mode::Arcalis),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub mode: Mode,
    pub latency: LatencyConfig,
    pub memory: MemConfig,
    pub calibration: Calibration,
    pub load: LoadMode,
    /// 1 for the single-core baseline, 2 for the split variant.
    pub baseline_cores: u8,
    pub max_payload: u32,
    /// Packets taken per NIC poll.
    pub rx_burst: u32,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            mode: Mode::Arcalis,
            latency: LatencyConfig::default(),
            memory: MemConfig::default(),
            calibration: Calibration::default(),
            load: LoadMode::default(),
            baseline_cores: 1,
            max_payload: DEFAULT_MAX_PAYLOAD as u32,
            rx_burst: 32,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.latency.validate()?;
        self.memory.validate()?;
        if !(1..=2).contains(&self.baseline_cores) {
            return Err(ConfigError::NotPositive("baseline_cores (1 or 2)"));
        }
        if self.max_payload == 0 {
            return Err(ConfigError::NotPositive("max_payload"));
        }
        if self.rx_burst == 0 {
            return Err(ConfigError::NotPositive("rx_burst"));
        }
        if self.calibration.engine.queue_depth == 0 {
            return Err(ConfigError::NotPositive("engine.queue_depth"));
        }
        match self.load {
            LoadMode::ClosedLoop { window: 0 } => Err(ConfigError::NotPositive("load.window")),
            LoadMode::FixedRate { rate_rps: 0 } => Err(ConfigError::NotPositive("load.rate_rps")),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub trace_events: bool,
    pub keep_responses: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimFailure {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid workload: {0}")]
    Workload(String),
    #[error("kernel: {0}")]
    Kernel(#[from] SimError),
    #[error("illegal engine transition: {0:?}")]
    Fsm(IllegalTransition),
    #[error("conservation violated: injected {injected} != completed {completed} + drops {drops} + errors {errors}")]
    Conservation { injected: u64, completed: u64, drops: u64, errors: u64 },
    #[error("simulation stalled with {0} requests never issued")]
    Stalled(u64),
    #[error("model invariant broken: {0}")]
    Internal(&'static str),
}

impl From<IllegalTransition> for SimFailure {
    fn from(e: IllegalTransition) -> Self {
        SimFailure::Fsm(e)
    }
}

/// Per-engine counters, in accelerator cycles.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EngineCounters {
    pub stages: StageCycles,
    pub busy_cycles: u64,
    pub requests: u64,
    pub transitions: BTreeMap<(FsmState, Trigger, FsmState), u64>,
    /// RPCs that entered BUSY and RPCs that reached DONE.
    pub entered: u64,
    pub finished: u64,
    pub faults: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoreReport {
    pub name: String,
    pub role: Option<CoreRole>,
    pub counters: CoreCounters,
}

/// Raw outcome of one simulation.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub mode: Mode,
    pub injected: u64,
    pub completed: u64,
    pub drops: u64,
    pub errors: u64,
    pub rejections: u64,
    pub end_time: SimTime,
    pub events: u64,
    pub latencies_ps: Vec<u64>,
    pub cores: Vec<CoreReport>,
    pub rx: EngineCounters,
    pub tx: EngineCounters,
    pub both_busy_instants: u64,
    /// RPCs inside an engine (between BUSY and DONE) at quiescence.
    pub engine_in_flight: u64,
    /// Requests injected but neither answered nor dropped at quiescence.
    pub requests_in_flight: u64,
    /// Bytes parsed or produced by software codecs on the host.
    pub cpu_codec_bytes: u64,
    pub snoop_rejected: u64,
    pub mem: MemStats,
    pub responses: Vec<(u32, Vec<u8>)>,
    pub trace: Vec<TraceRecord>,
    pub actor_names: Vec<String>,
}


#[derive(Clone, Debug, PartialEq, Eq)]
enum Ev {
    /// Request reaches the NIC.
    Arrive(u32),
    /// DCA finished; the packet is in the receive ring.
    Delivered,
    NetWake,
    NetDone,
    AppDone,
    /// AppCore polls again for AppResp space.
    AppRetry,
    BaseWake(u8),
    BaseDone(u8),
    UcStore(u64),
    UcLoad(CommandType),
    UcReply(CommandType, u64),
    WorkDone(EngineId),
    Drained(EngineId),
    Transmit(u32),
    Handoff,
}

impl EventKind for Ev {
    fn kind(&self) -> &'static str {
        match self {
            Ev::Arrive(_) => "arrive",
            Ev::Delivered => "delivered",
            Ev::NetWake => "net_wake",
            Ev::NetDone => "net_done",
            Ev::AppDone => "app_done",
            Ev::AppRetry => "app_retry",
            Ev::BaseWake(_) => "base_wake",
            Ev::BaseDone(_) => "base_done",
            Ev::UcStore(_) => "uc_store",
            Ev::UcLoad(CommandType::DpdkNetFlag) => "uc_load_net",
            Ev::UcLoad(_) => "uc_load_app",
            Ev::UcReply(CommandType::DpdkNetFlag, _) => "uc_reply_net",
            Ev::UcReply(..) => "uc_reply_app",
            Ev::WorkDone(EngineId::Rx) => "rx_work_done",
            Ev::WorkDone(EngineId::Tx) => "tx_work_done",
            Ev::Drained(EngineId::Rx) => "rx_drained",
            Ev::Drained(EngineId::Tx) => "tx_drained",
            Ev::Transmit(_) => "transmit",
            Ev::Handoff => "handoff",
        }
    }
}

/// A frame or record in a shared buffer, tagged with its request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Slot {
    idx: u32,
    kind: BufferKind,
    alloc: Allocation,
    vaddr: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CoreState {
    Idle,
    Running,
    Parked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Fault {
    vaddr: u64,
    flag: CommandType,
    reported: bool,
}

/// An RPC inside an engine, with its timing fixed at BUSY entry.
#[derive(Clone, Copy, Debug)]
struct EngineRun {
    input: Slot,
    /// Produced record or frame; `None` when the attempt faulted.
    out: Option<Slot>,
    in_flight: u32,
    drain_cycles: u64,
    total_cycles: u64,
}

struct Engine {
    fsm: EngineFsm,
    run: Option<EngineRun>,
    fault: Option<Fault>,
    counters: EngineCounters,
}

impl Engine {
    fn new() -> Self {
        Engine { fsm: EngineFsm::new(), run: None, fault: None, counters: EngineCounters::default() }
    }
}

struct Actors {
    client: ActorId,
    nic: ActorId,
    net: ActorId,
    app: ActorId,
    accel: ActorId,
    base: [ActorId; 2],
}

const APP_CPU: u8 = 1;

fn flag_slot(f: CommandType) -> usize {
    if f == CommandType::DpdkNetFlag {
        0
    } else {
        1
    }
}

fn frame_is_error(frame: &[u8]) -> bool {
    frame.len() > 5 && frame[5] == crate::wire::Direction::Error as u8
}

/// Stage byte counts of a frame that failed somewhere in the receive path.
fn error_rx_costs(frame_len: usize) -> crate::wire::StageCosts {
    crate::wire::StageCosts {
        header_bytes: frame_len.min(crate::wire::HEADER_LEN) as u32,
        dispatch_lookups: 1,
        deser_bytes: frame_len.saturating_sub(crate::wire::HEADER_LEN) as u32,
        ..Default::default()
    }
}

fn error_tx_costs(frame_len: usize) -> crate::wire::StageCosts {
    crate::wire::StageCosts {
        ser_bytes: frame_len.saturating_sub(crate::wire::HEADER_LEN) as u32,
        ser_items: 1,
        resp_header_bytes: crate::wire::HEADER_LEN as u32,
        ..Default::default()
    }
}

/// Where a receive-path failure was detected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RxStage {
    Header,
    Dispatch,
    Deserialize,
}

/// Receive-path decode shared by the engine and the software stack.
fn decode_request(
    codec: &Codec,
    schema: &ServiceSchema,
    frame: &[u8],
) -> Result<RpcMessage, (RxStage, ErrorCode, u8, u32)> {
    let h = parse_header(frame).map_err(|e| (RxStage::Header, e.error_code(), 0, 0))?;
    if schema.method(h.method_id).is_none() {
        return Err((RxStage::Dispatch, ErrorCode::UnknownMethod, h.method_id, h.seq_id));
    }
    match codec.deserialize(frame, schema) {
        Ok((msg, _)) if msg.direction == crate::wire::Direction::Request => Ok(msg),
        Ok(_) => Err((RxStage::Deserialize, ErrorCode::MalformedFrame, h.method_id, h.seq_id)),
        Err(e) => Err((RxStage::Deserialize, e.error_code(), h.method_id, h.seq_id)),
    }
}

struct Sim<'a> {
    cfg: SystemConfig,
    opts: RunOptions,
    k: Kernel<Ev>,
    a: Actors,
    mem: MemorySystem,
    schema: ServiceSchema,
    codec: Codec,
    frames: &'a [Option<Vec<u8>>],
    logic: BusinessLogic,

    next_issue: usize,
    ingress: BTreeMap<u32, SimTime>,
    in_dca: VecDeque<Slot>,
    rx_ring: VecDeque<Slot>,
    egress: BTreeMap<u32, Vec<u8>>,

    net_state: CoreState,
    net_park_at: SimTime,
    net_outstanding: u64,
    net_claimed: VecDeque<Slot>,
    app_state: CoreState,
    app_park_at: SimTime,
    app_claimed: VecDeque<Slot>,
    /// A finished response record still waiting for AppResp space.
    app_stalled: Option<(u32, Vec<u8>)>,
    snooper: Snooper,
    dispatcher: Dispatcher,
    parked: [bool; 2],
    tags: BTreeMap<u64, u32>,
    app_recv_ready: VecDeque<Slot>,
    net_resp_ready: VecDeque<Slot>,
    rx: Engine,
    tx: Engine,
    both_busy: u64,

    base_state: [CoreState; 2],
    handoff: VecDeque<(u32, Result<RpcMessage, Vec<u8>>)>,

    net_c: CoreCounters,
    app_c: CoreCounters,
    base_c: [CoreCounters; 2],
    cpu_codec_bytes: u64,

    injected: u64,
    completed: u64,
    drops: u64,
    errors: u64,
    latencies: Vec<u64>,
    responses: Vec<(u32, Vec<u8>)>,
}

/// Run the requests of `trace`. The logic state is seeded from `mix`.
pub fn run_trace(cfg: &SystemConfig, trace: &RequestTrace, mix: &WorkloadMix, opts: RunOptions) -> Result<RunOutput, SimFailure> {
    cfg.validate()?;
    let schema = trace.service.schema();
    let codec = Codec::new(cfg.max_payload as usize);
    let frames: Vec<Option<Vec<u8>>> =
        trace.messages.iter().map(|m| codec.serialize(m, &schema).ok().map(|f| f.0)).collect();
    run_frames(cfg, trace.service, &frames, mix, opts)
}

/// Run pre-encoded request frames, which may be malformed. `None` entries
/// model requests the client failed to encode and are counted as drops.
pub fn run_frames(
    cfg: &SystemConfig,
    service: crate::wire::Service,
    frames: &[Option<Vec<u8>>],
    mix: &WorkloadMix,
    opts: RunOptions,
) -> Result<RunOutput, SimFailure> {
    cfg.validate()?;
    let mut sim = Sim::new(cfg, service, frames, mix, opts);
    sim.start()?;
    while let Some(ev) = sim.k.next_event(RunLimit::Quiescence) {
        sim.handle(ev.payload)?;
    }
    sim.finish()
}

/// Generate the trace of `mix` and run it.
pub fn run_mix(cfg: &SystemConfig, mix: &WorkloadMix, opts: RunOptions) -> Result<RunOutput, SimFailure> {
    let trace = crate::workload::generate(mix).map_err(|e| SimFailure::Workload(alloc::format!("{e}")))?;
    run_trace(cfg, &trace, mix, opts)
}

impl<'a> Sim<'a> {
    fn new(
        cfg: &SystemConfig,
        service: crate::wire::Service,
        frames: &'a [Option<Vec<u8>>],
        mix: &WorkloadMix,
        opts: RunOptions,
    ) -> Self {
        let mut k = Kernel::new();
        if opts.trace_events {
            k.enable_trace();
        }
        let client = k.register_actor("client");
        let nic = k.register_actor("nic");
        let (net, app, accel, base, cores) = match cfg.mode {
            Mode::Arcalis => {
                let net = k.register_actor("netcore");
                let app = k.register_actor("appcore");
                let accel = k.register_actor("accel");
                (net, app, accel, [net, app], 2)
            }
            Mode::Baseline => {
                let b0 = k.register_actor("baseline0");
                let b1 = if cfg.baseline_cores == 2 { k.register_actor("baseline1") } else { b0 };
                (b0, b0, b0, [b0, b1], cfg.baseline_cores as usize)
            }
        };
        Sim {
            cfg: *cfg,
            opts,
            k,
            a: Actors { client, nic, net, app, accel, base },
            mem: MemorySystem::new(cfg.latency, cfg.memory, cores),
            schema: service.schema(),
            codec: Codec::new(cfg.max_payload as usize),
            frames,
            logic: BusinessLogic::new(service, cfg.calibration.logic, mix.seed, mix.value_size, mix.post_text_len),
            next_issue: 0,
            ingress: BTreeMap::new(),
            in_dca: VecDeque::new(),
            rx_ring: VecDeque::new(),
            egress: BTreeMap::new(),
            net_state: CoreState::Idle,
            net_park_at: SimTime::ZERO,
            net_outstanding: 0,
            net_claimed: VecDeque::new(),
            app_state: CoreState::Idle,
            app_park_at: SimTime::ZERO,
            app_claimed: VecDeque::new(),
            app_stalled: None,
            snooper: Snooper::new(WatchRange::default()),
            dispatcher: Dispatcher::new(cfg.calibration.engine.queue_depth as usize),
            parked: [false; 2],
            tags: BTreeMap::new(),
            app_recv_ready: VecDeque::new(),
            net_resp_ready: VecDeque::new(),
            rx: Engine::new(),
            tx: Engine::new(),
            both_busy: 0,
            base_state: [CoreState::Idle; 2],
            handoff: VecDeque::new(),
            net_c: CoreCounters::default(),
            app_c: CoreCounters::default(),
            base_c: [CoreCounters::default(); 2],
            cpu_codec_bytes: 0,
            injected: 0,
            completed: 0,
            drops: 0,
            errors: 0,
            latencies: Vec::with_capacity(frames.len()),
            responses: Vec::new(),
        }
    }

    fn cpu(&self, cycles: u64) -> SimTime {
        cycles_to_time(cycles, self.cfg.latency.cpu_freq_hz)
    }

    fn cpu_cycles(&self, t: SimTime) -> u64 {
        (t.0 as u128 * self.cfg.latency.cpu_freq_hz as u128).div_ceil(1_000_000_000_000) as u64
    }

    fn accel_cycles(&self, t: SimTime) -> u64 {
        (t.0 as u128 * self.cfg.latency.accel_freq_hz as u128).div_ceil(1_000_000_000_000) as u64
    }

    fn accel_time(&self, cycles: u64) -> SimTime {
        cycles_to_time(cycles, self.cfg.latency.accel_freq_hz)
    }

    fn start(&mut self) -> Result<(), SimFailure> {
        match self.cfg.load {
            LoadMode::ClosedLoop { window } => {
                for _ in 0..(window as usize).min(self.frames.len()) {
                    self.issue_next(SimTime::ZERO)?;
                }
            }
            LoadMode::FixedRate { rate_rps } => {
                let rate = rate_rps as u128;
                for i in 0..self.frames.len() {
                    let t = SimTime((i as u128 * 1_000_000_000_000 / rate) as u64);
                    self.k.schedule(t, self.a.nic, Ev::Arrive(i as u32))?;
                }
                self.next_issue = self.frames.len();
            }
        }
        if self.cfg.mode == Mode::Arcalis {
            self.app_park(SimTime::ZERO)?;
        }
        Ok(())
    }

    fn issue_next(&mut self, at: SimTime) -> Result<(), SimFailure> {
        if matches!(self.cfg.load, LoadMode::ClosedLoop { .. }) && self.next_issue < self.frames.len() {
            let i = self.next_issue as u32;
            self.next_issue += 1;
            self.k.schedule(at, self.a.nic, Ev::Arrive(i))?;
        }
        Ok(())
    }

    fn handle(&mut self, ev: Ev) -> Result<(), SimFailure> {
        match ev {
            Ev::Arrive(i) => self.on_arrive(i),
            Ev::Delivered => self.on_delivered(),
            Ev::NetWake => self.net_iteration(),
            Ev::NetDone => self.net_done(),
            Ev::AppDone => {
                let now = self.k.now();
                if self.app_stalled.is_some() {
                    let poll = self.cfg.calibration.host.stub_base.max(1);
                    self.app_c.stub += poll;
                    let at = now + self.cpu(poll);
                    self.k.schedule(at, self.a.app, Ev::AppRetry)?;
                    Ok(())
                } else {
                    self.app_park(now)
                }
            }
            Ev::AppRetry => self.app_iteration(),
            Ev::BaseWake(c) => self.base_iteration(c),
            Ev::BaseDone(c) => {
                self.base_state[c as usize] = CoreState::Idle;
                self.base_kick(c)
            }
            Ev::UcStore(raw) => self.on_uc_store(raw),
            Ev::UcLoad(flag) => self.on_uc_load(flag),
            Ev::UcReply(flag, raw) => self.on_uc_reply(flag, raw),
            Ev::WorkDone(e) => self.on_work_done(e),
            Ev::Drained(e) => self.on_drained(e),
            Ev::Transmit(i) => self.on_transmit(i),
            Ev::Handoff => self.base_kick(1),
        }
    }

    // ---- client and NIC ----

    fn on_arrive(&mut self, i: u32) -> Result<(), SimFailure> {
        let now = self.k.now();
        self.injected += 1;
        let Some(frame) = self.frames[i as usize].as_deref() else {
            self.drops += 1;
            return self.issue_next(now);
        };
        match self.mem.dca_inject(frame) {
            Ok((alloc, lat)) => {
                let vaddr = self.mem.buffer(BufferKind::NetRecv).vaddr(alloc.offset);
                self.ingress.insert(i, now);
                self.in_dca.push_back(Slot { idx: i, kind: BufferKind::NetRecv, alloc, vaddr });
                self.k.schedule(now + lat, self.a.nic, Ev::Delivered)?;
                Ok(())
            }
            Err(_) => {
                self.drops += 1;
                self.issue_next(now)
            }
        }
    }

    fn on_delivered(&mut self) -> Result<(), SimFailure> {
        let s = self.in_dca.pop_front().expect("one delivery per injected packet");
        self.rx_ring.push_back(s);
        match self.cfg.mode {
            Mode::Arcalis => {
                if self.net_state == CoreState::Idle {
                    self.net_state = CoreState::Running;
                    let now = self.k.now();
                    self.k.schedule(now, self.a.net, Ev::NetWake)?;
                }
                Ok(())
            }
            Mode::Baseline => self.base_kick(0),
        }
    }

    fn on_transmit(&mut self, i: u32) -> Result<(), SimFailure> {
        let now = self.k.now();
        let frame = self.egress.remove(&i).expect("transmitted frame was queued");
        if frame_is_error(&frame) {
            self.errors += 1;
        } else {
            self.completed += 1;
        }
        if let Some(t0) = self.ingress.remove(&i) {
            self.latencies.push((now - t0).0);
        }
        if self.opts.keep_responses {
            let seq = parse_header(&frame).map(|h| h.seq_id).unwrap_or(0);
            self.responses.push((seq, frame));
        }
        self.issue_next(now)
    }

    fn free(&mut self, s: Slot) {
        self.mem.buffer_mut(s.kind).free(s.alloc.offset);
    }

    // ---- accelerated mode: host cores ----

    fn uc_store(&mut self, at: SimTime, payload: u64, op: CommandType, c: &mut CoreCounters) -> Result<SimTime, SimFailure> {
        let issue = SimTime::from_ns(self.cfg.calibration.host.uc_store_issue_ns);
        c.uc += self.cpu_cycles(issue);
        let cmd = encode_command(payload, op).expect("buffer addresses fit the payload field");
        self.k.schedule(at + issue + self.cfg.latency.uc(), self.a.accel, Ev::UcStore(cmd.raw))?;
        Ok(at + issue)
    }

    fn net_iteration(&mut self) -> Result<(), SimFailure> {
        let mut t = self.k.now();
        let h = self.cfg.calibration.host;
        let mut c = self.net_c;
        while let Some(s) = self.net_claimed.pop_front() {
            let frame = self.mem.buffer(BufferKind::NetResp).read(s.alloc.offset, s.alloc.len).to_vec();
            self.free(s);
            self.egress.insert(s.idx, frame);
            self.k.schedule(t, self.a.client, Ev::Transmit(s.idx))?;
            let io = SimTime::from_ns(h.nic_tx_ns);
            c.io += self.cpu_cycles(io);
            t += io;
            self.net_outstanding -= 1;
        }
        let n = self.rx_ring.len().min(self.cfg.rx_burst as usize);
        for _ in 0..n {
            let s = self.rx_ring.pop_front().expect("counted");
            let io = SimTime::from_ns(h.nic_rx_ns);
            c.io += self.cpu_cycles(io);
            c.stub += h.net_per_packet;
            c.requests += 1;
            t += io + self.cpu(h.net_per_packet);
            self.tags.insert(s.vaddr, s.idx);
            t = self.uc_store(t, s.vaddr, CommandType::SendNetBuf, &mut c)?;
            t = self.uc_store(t, s.alloc.len, CommandType::SendNetLen, &mut c)?;
            self.net_outstanding += 1;
        }
        self.net_c = c;
        self.k.schedule(t, self.a.net, Ev::NetDone)?;
        Ok(())
    }

    fn net_done(&mut self) -> Result<(), SimFailure> {
        let now = self.k.now();
        if self.net_outstanding > 0 {
            self.net_state = CoreState::Parked;
            self.net_park_at = now;
            self.k.schedule(now + self.cfg.latency.uc(), self.a.accel, Ev::UcLoad(CommandType::DpdkNetFlag))?;
        } else if !self.rx_ring.is_empty() {
            self.k.schedule(now, self.a.net, Ev::NetWake)?;
        } else {
            self.net_state = CoreState::Idle;
        }
        Ok(())
    }

    fn app_park(&mut self, at: SimTime) -> Result<(), SimFailure> {
        self.app_state = CoreState::Parked;
        self.app_park_at = at;
        self.k.schedule(at + self.cfg.latency.uc(), self.a.accel, Ev::UcLoad(CommandType::AppReadyFlag))?;
        Ok(())
    }

    fn on_uc_reply(&mut self, flag: CommandType, raw: u64) -> Result<(), SimFailure> {
        let now = self.k.now();
        let status = StatusWord::decode(raw).map_err(|_| SimFailure::Internal("undecodable status word"))?;
        let is_net = flag == CommandType::DpdkNetFlag;
        let stall = self.cpu_cycles(now - if is_net { self.net_park_at } else { self.app_park_at });
        if is_net {
            self.net_c.stall += stall;
            self.net_state = CoreState::Running;
        } else {
            self.app_c.stall += stall;
            self.app_state = CoreState::Running;
        }
        match status {
            StatusWord::Ready { .. } => {
                if is_net {
                    self.net_iteration()
                } else {
                    self.app_iteration()
                }
            }
            StatusWord::Error { code: StatusCode::PageFault, vpn, .. } => {
                // The host maps the page and retries the wait.
                let page = self.cfg.memory.page_size.bytes();
                self.mem.host_map(vpn * page);
                self.mem.stats.host_faults += 1;
                let cost = SimTime::from_ns(self.cfg.memory.host_fault_ns);
                let cyc = self.cpu_cycles(cost);
                if is_net {
                    self.net_c.stub += cyc;
                    self.k.schedule(now + cost, self.a.net, Ev::NetDone)?;
                } else {
                    self.app_c.stub += cyc;
                    self.k.schedule(now + cost, self.a.app, Ev::AppDone)?;
                }
                Ok(())
            }
            StatusWord::Error { .. } => Err(SimFailure::Internal("unexpected error status")),
        }
    }

    fn app_iteration(&mut self) -> Result<(), SimFailure> {
        let mut t = self.k.now();
        let h = self.cfg.calibration.host;
        let mut c = self.app_c;
        let cpu = Actor::Cpu(APP_CPU);
        loop {
            let (idx, rec) = if let Some(p) = self.app_stalled.take() {
                p
            } else if let Some(s) = self.app_claimed.pop_front() {
                let bytes = self.mem.buffer(BufferKind::AppRecv).read(s.alloc.offset, s.alloc.len).to_vec();
                let load = self.mem.access(cpu, s.vaddr, s.alloc.len, AccessKind::Load).map_err(mem_internal)?;
                self.free(s);
                let req = decode_record(&bytes, &self.schema).map_err(|_| SimFailure::Internal("bad AppRecv record"))?;
                let (logic_cyc, resp) = self.run_logic(cpu, &req)?;
                let stub = h.stub_base
                    + h.stub_per_item * (req.item_count() + resp.item_count()) as u64
                    + self.cpu_cycles(load.overlapped(h.record_mlp));
                c.stub += stub;
                c.stages.logic += logic_cyc;
                c.requests += 1;
                t += self.cpu(stub + logic_cyc);
                (s.idx, encode_record(&resp))
            } else {
                break;
            };
            let buf = self.mem.buffer_mut(BufferKind::AppResp);
            let Some(alloc) = buf.alloc(rec.len() as u64) else {
                self.app_stalled = Some((idx, rec));
                break;
            };
            buf.write(alloc.offset, &rec);
            let vaddr = buf.vaddr(alloc.offset);
            let store = self.mem.access(cpu, vaddr, alloc.len, AccessKind::Store).map_err(mem_internal)?;
            let store_cyc = self.cpu_cycles(store.overlapped(h.record_mlp));
            c.stub += store_cyc;
            t += self.cpu(store_cyc);
            self.tags.insert(vaddr, idx);
            t = self.uc_store(t, vaddr, CommandType::SendAppBuf, &mut c)?;
            t = self.uc_store(t, alloc.len, CommandType::SendAppResp, &mut c)?;
        }
        self.app_c = c;
        self.k.schedule(t, self.a.app, Ev::AppDone)?;
        Ok(())
    }

    /// Business logic plus its memory accesses, in CPU cycles.
    fn run_logic(&mut self, cpu: Actor, req: &RpcMessage) -> Result<(u64, RpcMessage), SimFailure> {
        let out = self.logic.execute(req).map_err(|_| SimFailure::Internal("logic rejected a decoded request"))?;
        let mlp = self.cfg.calibration.host.record_mlp;
        let mut lat = SimTime::ZERO;
        for &(addr, size, kind) in &out.accesses {
            lat += self.mem.access(cpu, addr, size, kind).map_err(mem_internal)?.overlapped(mlp);
        }
        Ok((out.cycles + self.cpu_cycles(lat), out.response))
    }

    // ---- accelerated mode: accelerator ----

    fn reply(&mut self, flag: CommandType, status: StatusWord) -> Result<(), SimFailure> {
        let at = self.k.now() + self.cfg.latency.uc();
        let target = if flag == CommandType::DpdkNetFlag { self.a.net } else { self.a.app };
        self.k.schedule(at, target, Ev::UcReply(flag, status.encode()))?;
        Ok(())
    }

    /// Answer a parked flag load if its buffer has something ready.
    fn answer(&mut self, flag: CommandType) -> Result<(), SimFailure> {
        let i = flag_slot(flag);
        if !self.parked[i] {
            return Ok(());
        }
        for e in [EngineId::Rx, EngineId::Tx] {
            if let Some(f) = self.engine(e).fault {
                if f.flag == flag && !f.reported {
                    self.engine(e).fault = Some(Fault { reported: true, ..f });
                    self.parked[i] = false;
                    let vpn = f.vaddr / self.cfg.memory.page_size.bytes();
                    return self.reply(flag, StatusWord::Error { code: StatusCode::PageFault, slot: 0, vpn });
                }
            }
        }
        let (ready, claimed) = if flag == CommandType::DpdkNetFlag {
            (&mut self.net_resp_ready, &mut self.net_claimed)
        } else {
            (&mut self.app_recv_ready, &mut self.app_claimed)
        };
        if ready.is_empty() {
            return Ok(());
        }
        let count = ready.len() as u32;
        claimed.extend(ready.drain(..));
        self.parked[i] = false;
        self.reply(flag, StatusWord::Ready { flag, count })
    }

    fn on_uc_store(&mut self, raw: u64) -> Result<(), SimFailure> {
        let base = self.snooper.range.base;
        let access = BusAccess { paddr: base, kind: AccessKind::Store, uncacheable: true, data: raw };
        let Some(Ok(cmd)) = self.snooper.snoop(access) else {
            return Ok(());
        };
        let (payload, op) = cmd.decode().map_err(|_| SimFailure::Internal("snooped an undecodable command"))?;
        match self.dispatcher.dispatch(op, payload) {
            DispatchOutcome::Partial | DispatchOutcome::Parked(_) => Ok(()),
            DispatchOutcome::Queued(e) => self.try_start(e),
            DispatchOutcome::Rejected(e, desc) => self.reject(e, desc.addr, desc.len),
        }
    }

    fn on_uc_load(&mut self, flag: CommandType) -> Result<(), SimFailure> {
        let paddr = self.snooper.range.flag_address(flag);
        let access = BusAccess { paddr, kind: AccessKind::Load, uncacheable: true, data: 0 };
        let Some(Ok(cmd)) = self.snooper.snoop(access) else {
            return Err(SimFailure::Internal("flag load outside the watch range"));
        };
        let (_, op) = cmd.decode().map_err(|_| SimFailure::Internal("bad flag opcode"))?;
        match self.dispatcher.dispatch(op, 0) {
            DispatchOutcome::Parked(f) => self.parked[flag_slot(f)] = true,
            _ => return Err(SimFailure::Internal("flag load was not parked")),
        }
        // A reported fault has been handled by the host; retry the engine.
        for e in [EngineId::Rx, EngineId::Tx] {
            if let Some(f) = self.engine(e).fault {
                if f.flag == flag && f.reported {
                    self.engine(e).fault = None;
                    self.try_start(e)?;
                }
            }
        }
        self.answer(flag)
    }

    fn engine(&mut self, e: EngineId) -> &mut Engine {
        match e {
            EngineId::Rx => &mut self.rx,
            EngineId::Tx => &mut self.tx,
        }
    }

    fn slot_of(&self, kind: BufferKind, vaddr: u64, len: u64) -> Slot {
        let base = self.mem.buffer(kind).vaddr(0);
        let idx = *self.tags.get(&vaddr).expect("descriptor address was tagged");
        Slot { idx, kind, alloc: Allocation { offset: vaddr - base, len }, vaddr }
    }

    /// Queue overflow: the request is answered with an error frame.
    fn reject(&mut self, e: EngineId, addr: u64, len: u64) -> Result<(), SimFailure> {
        let (kind, seq, method) = match e {
            EngineId::Rx => {
                let s = self.slot_of(BufferKind::NetRecv, addr, len);
                let h = parse_header(self.mem.buffer(BufferKind::NetRecv).read(s.alloc.offset, len)).ok();
                (BufferKind::NetRecv, h.map_or(0, |h| h.seq_id), h.map_or(0, |h| h.method_id))
            }
            EngineId::Tx => {
                let s = self.slot_of(BufferKind::AppResp, addr, len);
                let b = self.mem.buffer(BufferKind::AppResp).read(s.alloc.offset, len);
                (BufferKind::AppResp, record_seq(b).unwrap_or(0), b.first().copied().unwrap_or(0))
            }
        };
        let s = self.slot_of(kind, addr, len);
        let frame = serialize_error(method, seq, ErrorCode::BufferFull).0;
        let buf = self.mem.buffer_mut(BufferKind::NetResp);
        let alloc = buf.alloc(frame.len() as u64).ok_or(SimFailure::Internal("NetResp buffer full"))?;
        buf.write(alloc.offset, &frame);
        let vaddr = buf.vaddr(alloc.offset);
        self.tags.remove(&addr);
        self.free(s);
        self.net_resp_ready.push_back(Slot { idx: s.idx, kind: BufferKind::NetResp, alloc, vaddr });
        self.answer(CommandType::DpdkNetFlag)
    }

    fn try_start(&mut self, e: EngineId) -> Result<(), SimFailure> {
        let eng = self.engine(e);
        if eng.run.is_some() || eng.fault.is_some() || !eng.fsm.state().is_idle() {
            return Ok(());
        }
        let Some(&desc) = self.dispatcher.pending(e).front() else {
            return Ok(());
        };
        match e {
            EngineId::Rx => self.start_rx(desc.addr, desc.len),
            EngineId::Tx => self.start_tx(desc.addr, desc.len),
        }
    }

    /// Reserve an output slot; `None` when the buffer is full.
    fn output(&mut self, kind: BufferKind, bytes: &[u8], idx: u32) -> Option<Slot> {
        let buf = self.mem.buffer_mut(kind);
        let alloc = buf.alloc(bytes.len() as u64)?;
        buf.write(alloc.offset, bytes);
        let vaddr = buf.vaddr(alloc.offset);
        Some(Slot { idx, kind, alloc, vaddr })
    }

    /// Enter BUSY with the given costs. Output stores issue one per cycle after
    /// the compute phase; stores still outstanding at work_done force DRAIN.
    fn enter_busy(
        &mut self,
        e: EngineId,
        input: Slot,
        out: Option<Slot>,
        mut stages: [u64; 3],
        store_stage: usize,
    ) -> Result<(), SimFailure> {
        let (mut in_flight, mut drain) = (0u32, 0u64);
        let mut out = out;
        if let Some(o) = out {
            match self.mem.access(Actor::Accel, o.vaddr, o.alloc.len, AccessKind::Store) {
                Ok(acc) => {
                    let per_line = self.accel_cycles(acc.line_max).max(1);
                    let issue = acc.lines as u64;
                    in_flight = (per_line - 1).min(issue) as u32;
                    drain = per_line - 1;
                    stages[store_stage] += self.accel_cycles(acc.translation) + issue + drain;
                }
                Err(MemError::PageFault { vaddr }) => {
                    self.mem.stats.page_faults += 1;
                    self.free(o);
                    out = None;
                    let flag = if o.kind == BufferKind::AppRecv { CommandType::AppReadyFlag } else { CommandType::DpdkNetFlag };
                    let eng = self.engine(e);
                    eng.counters.faults += 1;
                    eng.fault = Some(Fault { vaddr, flag, reported: false });
                }
                Err(_) => return Err(SimFailure::Internal("unexpected memory error")),
            }
        }
        let total: u64 = stages.iter().sum();
        let work = total - if in_flight > 0 { drain } else { 0 };
        let now = self.k.now();
        let other_busy = match e {
            EngineId::Rx => self.tx.fsm.state() == FsmState::Busy,
            EngineId::Tx => self.rx.fsm.state() == FsmState::Busy,
        };
        if other_busy {
            self.both_busy += 1;
        }
        let eng = self.engine(e);
        eng.fsm.fire(Trigger::ValidRequest, 0)?;
        eng.counters.entered += 1;
        let s = &mut eng.counters.stages;
        match e {
            EngineId::Rx => {
                s.header_parse += stages[0];
                s.dispatch += stages[1];
                s.deserialize += stages[2];
            }
            EngineId::Tx => {
                s.header_create += stages[0];
                s.serialize += stages[2];
            }
        }
        eng.run = Some(EngineRun { input, out, in_flight, drain_cycles: if in_flight > 0 { drain } else { 0 }, total_cycles: total });
        let at = now + self.accel_time(work);
        self.k.schedule(at, self.a.accel, Ev::WorkDone(e))?;
        Ok(())
    }

    fn start_rx(&mut self, addr: u64, len: u64) -> Result<(), SimFailure> {
        let input = self.slot_of(BufferKind::NetRecv, addr, len);
        let frame = self.mem.buffer(BufferKind::NetRecv).read(input.alloc.offset, len).to_vec();
        let load = self.mem.access(Actor::Accel, addr, len, AccessKind::Load).map_err(mem_internal)?;
        let load_cyc = self.accel_cycles(load.serial());
        let ec = self.cfg.calibration.engine;
        match decode_request(&self.codec, &self.schema, &frame) {
            Ok(msg) => {
                let rx = ec.rx(&stage_costs(&msg));
                let rec = encode_record(&msg);
                let Some(out) = self.output(BufferKind::AppRecv, &rec, input.idx) else {
                    return Ok(()); // AppRecv full: retried when the AppCore frees space.
                };
                self.enter_busy(EngineId::Rx, input, Some(out), [rx.header_parse, rx.dispatch, rx.deserialize + load_cyc], 2)
            }
            Err((stage, code, method, seq)) => {
                let ef = serialize_error(method, seq, code).0;
                let rx = ec.rx(&error_rx_costs(frame.len()));
                let tx = ec.tx(&error_tx_costs(ef.len()));
                let Some(out) = self.output(BufferKind::NetResp, &ef, input.idx) else {
                    return Ok(());
                };
                let mut st = [rx.header_parse + load_cyc, 0, 0];
                let at = match stage {
                    RxStage::Header => 0,
                    RxStage::Dispatch => {
                        st[1] = rx.dispatch;
                        1
                    }
                    RxStage::Deserialize => {
                        st[1] = rx.dispatch;
                        st[2] = rx.deserialize;
                        2
                    }
                };
                st[at] += tx.header_create + tx.serialize;
                self.enter_busy(EngineId::Rx, input, Some(out), st, at)
            }
        }
    }

    fn start_tx(&mut self, addr: u64, len: u64) -> Result<(), SimFailure> {
        let input = self.slot_of(BufferKind::AppResp, addr, len);
        let rec = self.mem.buffer(BufferKind::AppResp).read(input.alloc.offset, len).to_vec();
        let ec = self.cfg.calibration.engine;
        let load = self.mem.access(Actor::Accel, addr, len, AccessKind::Load).map_err(mem_internal)?;
        let load_cyc = self.accel_cycles(load.overlapped(ec.tx_load_mlp));
        let frame = decode_record(&rec, &self.schema)
            .map_err(|_| ErrorCode::SchemaViolation)
            .and_then(|m| self.codec.serialize(&m, &self.schema).map(|f| (f.0, m)).map_err(|e: WireError| e.error_code()));
        let (bytes, tx) = match frame {
            Ok((f, m)) => (f, ec.tx(&stage_costs(&m))),
            Err(code) => {
                let ef = serialize_error(rec.first().copied().unwrap_or(0), record_seq(&rec).unwrap_or(0), code).0;
                let tx = ec.tx(&error_tx_costs(ef.len()));
                (ef, tx)
            }
        };
        let Some(out) = self.output(BufferKind::NetResp, &bytes, input.idx) else {
            return Ok(());
        };
        self.enter_busy(EngineId::Tx, input, Some(out), [tx.header_create, 0, tx.serialize + load_cyc], 2)
    }

    fn on_work_done(&mut self, e: EngineId) -> Result<(), SimFailure> {
        let run = self.engine(e).run.expect("work_done for a running engine");
        let st = self.engine(e).fsm.fire(Trigger::WorkDone, run.in_flight)?;
        if st == FsmState::Drain {
            let at = self.k.now() + self.accel_time(run.drain_cycles);
            self.k.schedule(at, self.a.accel, Ev::Drained(e))?;
            return Ok(());
        }
        self.complete(e)
    }

    fn on_drained(&mut self, e: EngineId) -> Result<(), SimFailure> {
        self.engine(e).fsm.fire(Trigger::MemDrained, 0)?;
        self.complete(e)
    }

    fn complete(&mut self, e: EngineId) -> Result<(), SimFailure> {
        let run = self.engine(e).run.take().expect("engine had a run");
        let eng = self.engine(e);
        eng.counters.busy_cycles += run.total_cycles;
        eng.counters.finished += 1;
        let Some(out) = run.out else {
            // Faulted: the descriptor stays queued until the host maps the page.
            let eng = self.engine(e);
            eng.fsm.fire(Trigger::NoWork, 0)?;
            let flag = eng.fault.map(|f| f.flag).expect("aborted runs carry a fault");
            return self.answer(flag);
        };
        self.engine(e).counters.requests += 1;
        self.dispatcher.pending_mut(e).pop_front();
        self.tags.remove(&run.input.vaddr);
        self.free(run.input);
        let flag = if out.kind == BufferKind::AppRecv {
            self.app_recv_ready.push_back(out);
            CommandType::AppReadyFlag
        } else {
            self.net_resp_ready.push_back(out);
            CommandType::DpdkNetFlag
        };
        self.answer(flag)?;
        let more = !self.dispatcher.pending(e).is_empty();
        let trig = if more { Trigger::MoreWork } else { Trigger::NoWork };
        self.engine(e).fsm.fire(trig, 0)?;
        // Space freed by this run may unblock the other engine.
        self.try_start(e)?;
        let other = if e == EngineId::Rx { EngineId::Tx } else { EngineId::Rx };
        self.try_start(other)
    }

    // ---- baseline mode ----

    fn base_kick(&mut self, c: u8) -> Result<(), SimFailure> {
        let ci = c as usize;
        let has_work = if c == 0 { !self.rx_ring.is_empty() } else { !self.handoff.is_empty() };
        if self.base_state[ci] == CoreState::Idle && has_work {
            self.base_state[ci] = CoreState::Running;
            let now = self.k.now();
            self.k.schedule(now, self.a.base[ci], Ev::BaseWake(c))?;
        }
        Ok(())
    }

    fn base_iteration(&mut self, c: u8) -> Result<(), SimFailure> {
        let split = self.cfg.baseline_cores == 2;
        let mut t = self.k.now();
        let h = self.cfg.calibration.host;
        let cpu = Actor::Cpu(c);
        let mut cc = self.base_c[c as usize];
        let (idx, parsed) = if c == 0 {
            let Some(s) = self.rx_ring.pop_front() else {
                self.base_state[0] = CoreState::Idle;
                return Ok(());
            };
            let io = SimTime::from_ns(h.nic_rx_ns);
            cc.io += self.cpu_cycles(io);
            cc.stub += h.net_per_packet;
            cc.requests += 1;
            t += io + self.cpu(h.net_per_packet);
            let frame = self.mem.buffer(BufferKind::NetRecv).read(s.alloc.offset, s.alloc.len).to_vec();
            let load = self.mem.access(cpu, s.vaddr, s.alloc.len, AccessKind::Load).map_err(mem_internal)?;
            self.free(s);
            let rc = self.cfg.calibration.cpu;
            let load_cyc = self.cpu_cycles(load.overlapped(rc.frame_mlp));
            cc.codec_calls += 1;
            self.cpu_codec_bytes += frame.len() as u64;
            let parsed = match decode_request(&self.codec, &self.schema, &frame) {
                Ok(msg) => {
                    let sc = stage_costs(&msg);
                    let st = [rc.header_parse(&sc), rc.dispatch(&sc), rc.deserialize(&sc) + load_cyc];
                    cc.stages.header_parse += st[0];
                    cc.stages.dispatch += st[1];
                    cc.stages.deserialize += st[2];
                    t += self.cpu(st.iter().sum());
                    Ok(msg)
                }
                Err((stage, code, method, seq)) => {
                    let sc = error_rx_costs(frame.len());
                    cc.stages.header_parse += rc.header_parse(&sc) + load_cyc;
                    let mut cyc = rc.header_parse(&sc) + load_cyc;
                    if stage != RxStage::Header {
                        cc.stages.dispatch += rc.dispatch(&sc);
                        cyc += rc.dispatch(&sc);
                    }
                    if stage == RxStage::Deserialize {
                        cc.stages.deserialize += rc.deserialize(&sc);
                        cyc += rc.deserialize(&sc);
                    }
                    t += self.cpu(cyc);
                    Err(serialize_error(method, seq, code).0)
                }
            };
            if split && parsed.is_ok() {
                self.handoff.push_back((s.idx, parsed));
                let hand = SimTime::from_ns(h.handoff_ns);
                cc.stub += self.cpu_cycles(hand);
                t += hand;
                self.k.schedule(t, self.a.base[1], Ev::Handoff)?;
                self.base_c[0] = cc;
                self.k.schedule(t, self.a.base[0], Ev::BaseDone(0))?;
                return Ok(());
            }
            (s.idx, parsed)
        } else {
            let Some(item) = self.handoff.pop_front() else {
                self.base_state[1] = CoreState::Idle;
                return Ok(());
            };
            item
        };
        let frame = match parsed {
            Ok(req) => {
                let (logic_cyc, resp) = self.run_logic(cpu, &req)?;
                cc.stages.logic += logic_cyc;
                t += self.cpu(logic_cyc);
                match self.codec.serialize(&resp, &self.schema) {
                    Ok(f) => f.0,
                    Err(e) => serialize_error(req.method_id, req.seq_id, e.error_code()).0,
                }
            }
            Err(ef) => ef,
        };
        let rc = self.cfg.calibration.cpu;
        let sc = error_tx_costs(frame.len());
        let s = self.output(BufferKind::NetResp, &frame, idx).ok_or(SimFailure::Internal("NetResp buffer full"))?;
        let store = self.mem.access(cpu, s.vaddr, s.alloc.len, AccessKind::Store).map_err(mem_internal)?;
        let ser = rc.serialize(&sc) + self.cpu_cycles(store.overlapped(rc.frame_mlp));
        cc.stages.header_create += rc.header_create(&sc);
        cc.stages.serialize += ser;
        cc.codec_calls += 1;
        self.cpu_codec_bytes += frame.len() as u64;
        t += self.cpu(rc.header_create(&sc) + ser);
        self.free(s);
        self.egress.insert(idx, frame);
        self.k.schedule(t, self.a.client, Ev::Transmit(idx))?;
        let io = SimTime::from_ns(h.nic_tx_ns);
        cc.io += self.cpu_cycles(io);
        t += io;
        self.base_c[c as usize] = cc;
        self.k.schedule(t, self.a.base[c as usize], Ev::BaseDone(c))?;
        Ok(())
    }

    fn finish(mut self) -> Result<RunOutput, SimFailure> {
        let end = self.k.last_processed();
        let engine_in_flight = [&self.rx, &self.tx].iter().map(|e| e.counters.entered - e.counters.finished).sum();
        let requests_in_flight = self.injected - self.completed - self.drops - self.errors;
        if self.injected != self.completed + self.drops + self.errors {
            return Err(SimFailure::Conservation {
                injected: self.injected,
                completed: self.completed,
                drops: self.drops,
                errors: self.errors,
            });
        }
        if self.injected < self.frames.len() as u64 {
            return Err(SimFailure::Stalled(self.frames.len() as u64 - self.injected));
        }
        let cores = match self.cfg.mode {
            Mode::Arcalis => alloc::vec![
                CoreReport { name: "netcore".into(), role: Some(CoreRole::Net), counters: self.net_c },
                CoreReport { name: "appcore".into(), role: Some(CoreRole::App), counters: self.app_c },
            ],
            Mode::Baseline => (0..self.cfg.baseline_cores as usize)
                .map(|i| CoreReport {
                    name: alloc::format!("baseline{i}"),
                    role: Some(CoreRole::Baseline),
                    counters: self.base_c[i],
                })
                .collect(),
        };
        self.rx.counters.transitions = self.rx.fsm.transitions.clone();
        self.tx.counters.transitions = self.tx.fsm.transitions.clone();
        let actor_names = (0..self.k.actor_count()).map(|i| self.k.actor_name(ActorId(i as u16)).into()).collect();
        Ok(RunOutput {
            mode: self.cfg.mode,
            injected: self.injected,
            completed: self.completed,
            drops: self.drops,
            errors: self.errors,
            rejections: self.dispatcher.rejected,
            end_time: end,
            events: self.k.processed(),
            latencies_ps: self.latencies,
            cores,
            rx: self.rx.counters,
            tx: self.tx.counters,
            both_busy_instants: self.both_busy,
            engine_in_flight,
            requests_in_flight,
            cpu_codec_bytes: self.cpu_codec_bytes,
            snoop_rejected: self.snooper.rejected,
            mem: self.mem.stats,
            responses: self.responses,
            trace: self.k.take_trace().unwrap_or_default(),
            actor_names,
        })
    }
}

fn mem_internal(_: MemError) -> SimFailure {
    SimFailure::Internal("unexpected memory fault on a host-mapped address")
}
