//! Request-trace generation for the shipped services.

mod zipf;

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use zipf::Zipf;

use crate::rng::{streams, SimRng};
use crate::simkern::SimTime;
use crate::wire::{method_ids, FieldType, RpcMessage, Service, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Get,
    Set,
    StorePost,
    ReadPost,
    ReadPosts,
    ComposeUniqueId,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Get, Op::Set, Op::StorePost, Op::ReadPost, Op::ReadPosts, Op::ComposeUniqueId];

    pub fn service(self) -> Service {
        match self {
            Op::Get | Op::Set => Service::Memcached,
            Op::StorePost | Op::ReadPost | Op::ReadPosts => Service::PostStorage,
            Op::ComposeUniqueId => Service::UniqueId,
        }
    }

    pub fn method_id(self) -> u8 {
        match self {
            Op::Get => method_ids::MEMC_GET,
            Op::Set => method_ids::MEMC_SET,
            Op::StorePost => method_ids::STORE_POST,
            Op::ReadPost => method_ids::READ_POST,
            Op::ReadPosts => method_ids::READ_POSTS,
            Op::ComposeUniqueId => method_ids::COMPOSE_UNIQUE_ID,
        }
    }

    pub fn from_method(service: Service, method_id: u8) -> Option<Op> {
        Op::ALL.into_iter().find(|o| o.service() == service && o.method_id() == method_id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Get => "get",
            Op::Set => "set",
            Op::StorePost => "store_post",
            Op::ReadPost => "read_post",
            Op::ReadPosts => "read_posts",
            Op::ComposeUniqueId => "compose_unique_id",
        }
    }

    pub fn from_name(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|o| o.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpRatio {
    pub op: Op,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadMix {
    pub name: String,
    pub service: Service,
    pub ops: Vec<OpRatio>,
    pub key_size: u32,
    pub value_size: u32,
    pub keyspace: u64,
    pub zipf_s: f64,
    pub request_count: u64,
    pub seed: u64,
    pub post_text_len: u32,
    pub posts_per_read: u32,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("invalid mix: {0}")]
    InvalidMix(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

pub const PRESETS: [&str; 9] = [
    "memc_low",
    "memc_mid",
    "memc_high",
    "memc_tiny",
    "memc_small",
    "post_low",
    "post_mid",
    "post_high",
    "unique_id",
];

/// The presets whose speedups are reported together.
pub const SPEEDUP_PRESETS: [&str; 7] =
    ["memc_low", "memc_mid", "memc_high", "post_low", "post_mid", "post_high", "unique_id"];

pub const DEFAULT_KEYSPACE: u64 = 100_000;
pub const DEFAULT_ZIPF_S: f64 = 0.99;
pub const DEFAULT_REQUESTS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;

impl WorkloadMix {
    fn base(name: &str, service: Service, ops: Vec<OpRatio>) -> Self {
        WorkloadMix {
            name: name.to_string(),
            service,
            ops,
            key_size: 16,
            value_size: 64,
            keyspace: DEFAULT_KEYSPACE,
            zipf_s: DEFAULT_ZIPF_S,
            request_count: DEFAULT_REQUESTS,
            seed: DEFAULT_SEED,
            post_text_len: 64,
            posts_per_read: 10,
        }
    }

    pub fn memcached(name: &str, set_ratio: f64, key_size: u32, value_size: u32) -> Self {
        let mut m = Self::base(
            name,
            Service::Memcached,
            vec![OpRatio { op: Op::Set, ratio: set_ratio }, OpRatio { op: Op::Get, ratio: 1.0 - set_ratio }],
        );
        m.key_size = key_size;
        m.value_size = value_size;
        m
    }

    pub fn post(name: &str, store: f64, read: f64, read_many: f64) -> Self {
        Self::base(
            name,
            Service::PostStorage,
            vec![
                OpRatio { op: Op::StorePost, ratio: store },
                OpRatio { op: Op::ReadPost, ratio: read },
                OpRatio { op: Op::ReadPosts, ratio: read_many },
            ],
        )
    }

    pub fn preset(name: &str) -> Result<Self, WorkloadError> {
        const THIRD: f64 = 1.0 / 3.0;
        Ok(match name {
            "memc_low" => Self::memcached(name, 0.2, 16, 64),
            "memc_mid" => Self::memcached(name, 0.5, 16, 64),
            "memc_high" => Self::memcached(name, 0.8, 16, 64),
            "memc_tiny" => Self::memcached(name, 0.5, 8, 8),
            "memc_small" => Self::memcached(name, 0.5, 16, 32),
            "post_low" => Self::post(name, 0.1, 0.5, 0.4),
            "post_mid" => Self::post(name, THIRD, THIRD, 1.0 - 2.0 * THIRD),
            "post_high" => Self::post(name, 0.9, 0.05, 0.05),
            "unique_id" => Self::base(name, Service::UniqueId, vec![OpRatio { op: Op::ComposeUniqueId, ratio: 1.0 }]),
            other => return Err(WorkloadError::UnknownPreset(other.to_string())),
        })
    }

    pub fn with_requests(mut self, n: u64) -> Self {
        self.request_count = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Ratio of `op`, zero if absent.
    pub fn ratio(&self, op: Op) -> f64 {
        self.ops.iter().filter(|o| o.op == op).map(|o| o.ratio).sum()
    }

    /// Set the write ratio of a memcached mix, keeping reads as the rest.
    pub fn set_write_ratio(&mut self, w: f64) {
        for o in &mut self.ops {
            o.ratio = match o.op {
                Op::Set | Op::StorePost => w,
                _ => o.ratio,
            };
        }
        if self.service == Service::Memcached {
            for o in &mut self.ops {
                if o.op == Op::Get {
                    o.ratio = 1.0 - w;
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |s: &str| Err(WorkloadError::InvalidMix(s.to_string()));
        if self.ops.is_empty() {
            return bad("no operations");
        }
        if self.ops.iter().any(|o| o.op.service() != self.service) {
            return bad("operation does not belong to the service");
        }
        if self.ops.iter().any(|o| !(o.ratio >= 0.0 && o.ratio <= 1.0)) {
            return bad("ratios must lie in [0, 1]");
        }
        let sum: f64 = self.ops.iter().map(|o| o.ratio).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad("ratios must sum to 1");
        }
        if self.request_count == 0 {
            return bad("request_count must be positive");
        }
        if self.keyspace == 0 {
            return bad("keyspace must be positive");
        }
        if !(self.zipf_s >= 0.0 && self.zipf_s.is_finite()) {
            return bad("zipf_s must be a finite non-negative number");
        }
        if self.service == Service::Memcached && (self.key_size as usize) < digits(self.keyspace - 1) {
            return bad("key_size too small to give every key in the keyspace a distinct name");
        }
        if self.request_count > u32::MAX as u64 {
            return bad("request_count exceeds the 32-bit sequence space");
        }
        Ok(())
    }
}

fn digits(mut n: u64) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}

/// Key bytes for zero-based key id `id`: decimal, zero-padded to `size`.
pub fn key_bytes(id: u64, size: u32) -> Vec<u8> {
    let mut out = vec![b'0'; size as usize];
    let mut n = id;
    for slot in out.iter_mut().rev() {
        *slot = b'0' + (n % 10) as u8;
        n /= 10;
        if n == 0 {
            break;
        }
    }
    out
}

/// Deterministic printable text of length `len`.
pub fn text_bytes(rng: &mut SimRng, len: u32) -> String {
    (0..len).map(|_| char::from(b'a' + rng.below(26) as u8)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequestTrace {
    pub service: Service,
    pub messages: Vec<RpcMessage>,
    /// Nominal arrival offsets; all zero until an offered-load schedule is
    /// applied.
    pub offsets: Vec<SimTime>,
}

impl RequestTrace {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

/// Build the request trace of `mix`: a pure function of the mix and its seed.
pub fn generate(mix: &WorkloadMix) -> Result<RequestTrace, WorkloadError> {
    mix.validate()?;
    let mut ops_rng = SimRng::new(mix.seed, streams::OPS);
    let mut key_rng = SimRng::new(mix.seed, streams::KEYS);
    let mut val_rng = SimRng::new(mix.seed, streams::VALUES);
    let zipf = Zipf::new(mix.keyspace, mix.zipf_s);
    let mut cum = Vec::with_capacity(mix.ops.len());
    let mut acc = 0.0;
    for o in &mix.ops {
        acc += o.ratio;
        cum.push((acc, o.op));
    }
    let pick = |u: f64| cum.iter().find(|(c, _)| u < *c).map(|(_, op)| *op).unwrap_or(cum.last().unwrap().1);

    let mut messages = Vec::with_capacity(mix.request_count as usize);
    for i in 0..mix.request_count {
        let seq = i as u32;
        let op = pick(ops_rng.next_f64());
        let fields = match op {
            Op::Get => vec![(1, Value::Bytes(key_bytes(zipf.sample(&mut key_rng) - 1, mix.key_size)))],
            Op::Set => {
                let key = key_bytes(zipf.sample(&mut key_rng) - 1, mix.key_size);
                let mut value = vec![0u8; mix.value_size as usize];
                val_rng.fill_bytes(&mut value);
                vec![(1, Value::Bytes(key)), (2, Value::Bytes(value))]
            }
            Op::StorePost => {
                let post_id = zipf.sample(&mut key_rng) as i64;
                vec![
                    (1, Value::I64(i as i64)),
                    (2, Value::I64(post_id)),
                    (3, Value::I64(post_id * 7919 % 1000)),
                    (4, Value::I64(1_700_000_000_000 + i as i64)),
                    (5, Value::String(text_bytes(&mut val_rng, mix.post_text_len))),
                ]
            }
            Op::ReadPost => vec![(1, Value::I64(i as i64)), (2, Value::I64(zipf.sample(&mut key_rng) as i64))],
            Op::ReadPosts => {
                let ids = (0..mix.posts_per_read).map(|_| Value::I64(zipf.sample(&mut key_rng) as i64)).collect();
                vec![(1, Value::I64(i as i64)), (2, Value::List { elem: FieldType::I64, items: ids })]
            }
            Op::ComposeUniqueId => vec![],
        };
        messages.push(RpcMessage::request(op.method_id(), seq, fields));
    }
    let offsets = vec![SimTime::ZERO; messages.len()];
    Ok(RequestTrace { service: mix.service, messages, offsets })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LoadMode {
    /// Keep `window` requests outstanding; each transmitted response releases
    /// the next request.
    ClosedLoop { window: u32 },
    FixedRate { rate_rps: u64 },
}

impl Default for LoadMode {
    fn default() -> Self {
        LoadMode::ClosedLoop { window: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArrivalSchedule {
    ClosedLoop { window: u32 },
    Fixed(Vec<SimTime>),
}

/// Turn a trace into an arrival schedule. Message contents are untouched.
pub fn offered_load(trace: &RequestTrace, mode: LoadMode) -> ArrivalSchedule {
    match mode {
        LoadMode::ClosedLoop { window } => ArrivalSchedule::ClosedLoop { window: window.max(1) },
        LoadMode::FixedRate { rate_rps } => {
            let rate = rate_rps.max(1) as u128;
            ArrivalSchedule::Fixed(
                (0..trace.len() as u128).map(|i| SimTime((i * 1_000_000_000_000 / rate) as u64)).collect(),
            )
        }
    }
}
