//! Business logic of the three services: real state plus a cycle and
//! memory-access cost per request. The same model runs in both modes.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mem::{AccessKind, HEAP_BASE, LINE};
use crate::rng::{streams, SimRng};
use crate::wire::{method_ids, FieldType, RpcMessage, Service, Value};
use crate::workload::text_bytes;

/// Logic costs in CPU cycles; per-byte rates in milli-cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogicCosts {
    pub get: u64,
    pub set: u64,
    pub kv_mc_per_byte: u64,
    pub store_post: u64,
    pub read_post: u64,
    pub read_posts_base: u64,
    pub read_posts_per_post: u64,
    pub post_mc_per_byte: u64,
    pub compose_unique_id: u64,
}

impl Default for LogicCosts {
    fn default() -> Self {
        LogicCosts {
            get: 1920,
            set: 4770,
            kv_mc_per_byte: 0,
            store_post: 12400,
            read_post: 2500,
            read_posts_base: 6000,
            read_posts_per_post: 0,
            post_mc_per_byte: 0,
            compose_unique_id: 4000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("request does not match the service schema")]
    BadRequest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicOutcome {
    pub response: RpcMessage,
    pub cycles: u64,
    pub accesses: Vec<(u64, u64, AccessKind)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Post {
    creator_id: i64,
    timestamp: i64,
    text: Vec<u8>,
}

const BUCKETS: u64 = 1 << 18;
const ITEM_REGION: u64 = HEAP_BASE + BUCKETS * LINE;
const ITEM_SLOTS: u64 = 1 << 20;
const UID_BASE: i64 = 1 << 40;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn milli(rate: u64, bytes: usize) -> u64 {
    (rate * bytes as u64).div_ceil(1000)
}

/// Service state. Keys that were never written read back as deterministic
/// preloaded values, so the store behaves as if fully populated.
#[derive(Clone, Debug)]
pub struct BusinessLogic {
    pub service: Service,
    pub costs: LogicCosts,
    seed: u64,
    value_len: u32,
    text_len: u32,
    kv: BTreeMap<Vec<u8>, Vec<u8>>,
    posts: BTreeMap<i64, Post>,
    next_id: i64,
}

impl BusinessLogic {
    pub fn new(service: Service, costs: LogicCosts, seed: u64, value_len: u32, text_len: u32) -> Self {
        BusinessLogic {
            service,
            costs,
            seed,
            value_len,
            text_len,
            kv: BTreeMap::new(),
            posts: BTreeMap::new(),
            next_id: 0,
        }
    }

    fn item_addr(&self, h: u64, size: u64) -> u64 {
        let stride = (48 + size).div_ceil(LINE) * LINE;
        ITEM_REGION + (h % ITEM_SLOTS) * stride
    }

    fn preloaded_value(&self, key: &[u8]) -> Vec<u8> {
        let mut r = SimRng::new(self.seed ^ fnv1a(key), streams::STATE);
        let mut v = vec![0u8; self.value_len as usize];
        r.fill_bytes(&mut v);
        v
    }

    fn post(&self, id: i64) -> Post {
        match self.posts.get(&id) {
            Some(p) => p.clone(),
            None => {
                let mut r = SimRng::new(self.seed ^ id as u64, streams::STATE);
                Post {
                    creator_id: id * 7919 % 1000,
                    timestamp: 1_600_000_000_000 + id,
                    text: text_bytes(&mut r, self.text_len).into_bytes(),
                }
            }
        }
    }

    /// Post flattened into the element format of a `ReadPosts` response.
    fn post_blob(id: i64, p: &Post) -> Vec<u8> {
        let mut b = Vec::with_capacity(24 + p.text.len());
        b.extend_from_slice(&id.to_le_bytes());
        b.extend_from_slice(&p.creator_id.to_le_bytes());
        b.extend_from_slice(&p.timestamp.to_le_bytes());
        b.extend_from_slice(&p.text);
        b
    }

    fn post_accesses(&self, id: i64, size: u64, kind: AccessKind, acc: &mut Vec<(u64, u64, AccessKind)>) {
        let h = fnv1a(&id.to_le_bytes());
        acc.push((HEAP_BASE + (h % BUCKETS) * LINE, 8, AccessKind::Load));
        acc.push((self.item_addr(h, size), size, kind));
    }

    pub fn execute(&mut self, req: &RpcMessage) -> Result<LogicOutcome, LogicError> {
        let c = self.costs;
        let bytes_of = |id: u16| req.field(id).and_then(Value::as_bytes).ok_or(LogicError::BadRequest);
        let int_of = |id: u16| req.field(id).and_then(Value::as_i64).ok_or(LogicError::BadRequest);
        let mut accesses = Vec::new();
        let (fields, cycles) = match (self.service, req.method_id) {
            (Service::Memcached, method_ids::MEMC_GET) => {
                let key = bytes_of(1)?;
                let h = fnv1a(key);
                let value = self.kv.get(key).cloned().unwrap_or_else(|| self.preloaded_value(key));
                accesses.push((HEAP_BASE + (h % BUCKETS) * LINE, 8, AccessKind::Load));
                accesses.push((self.item_addr(h, (key.len() + value.len()) as u64), (key.len() + value.len()) as u64, AccessKind::Load));
                let cycles = c.get + milli(c.kv_mc_per_byte, key.len() + value.len());
                (vec![(1, Value::Bytes(value))], cycles)
            }
            (Service::Memcached, method_ids::MEMC_SET) => {
                let key = bytes_of(1)?.to_vec();
                let value = bytes_of(2)?.to_vec();
                let h = fnv1a(&key);
                let size = (key.len() + value.len()) as u64;
                accesses.push((HEAP_BASE + (h % BUCKETS) * LINE, 8, AccessKind::Store));
                accesses.push((self.item_addr(h, size), size, AccessKind::Store));
                // Slab/LRU metadata line.
                accesses.push((HEAP_BASE - LINE * (1 + h % 64), 8, AccessKind::Store));
                let cycles = c.set + milli(c.kv_mc_per_byte, key.len() + value.len());
                self.kv.insert(key, value);
                (vec![(1, Value::Bool(true))], cycles)
            }
            (Service::PostStorage, method_ids::STORE_POST) => {
                let id = int_of(2)?;
                let text = bytes_of(5)?.to_vec();
                let post = Post { creator_id: int_of(3)?, timestamp: int_of(4)?, text };
                let size = 24 + post.text.len() as u64;
                self.post_accesses(id, size, AccessKind::Store, &mut accesses);
                let cycles = c.store_post + milli(c.post_mc_per_byte, size as usize);
                self.posts.insert(id, post);
                (vec![(1, Value::Bool(true))], cycles)
            }
            (Service::PostStorage, method_ids::READ_POST) => {
                let id = int_of(2)?;
                let p = self.post(id);
                let size = 24 + p.text.len() as u64;
                self.post_accesses(id, size, AccessKind::Load, &mut accesses);
                let cycles = c.read_post + milli(c.post_mc_per_byte, size as usize);
                let text = alloc::string::String::from_utf8(p.text).map_err(|_| LogicError::BadRequest)?;
                (
                    vec![
                        (2, Value::I64(id)),
                        (3, Value::I64(p.creator_id)),
                        (4, Value::I64(p.timestamp)),
                        (5, Value::String(text)),
                    ],
                    cycles,
                )
            }
            (Service::PostStorage, method_ids::READ_POSTS) => {
                let Some(Value::List { items, .. }) = req.field(2) else {
                    return Err(LogicError::BadRequest);
                };
                let mut blobs = Vec::with_capacity(items.len());
                let mut cycles = c.read_posts_base;
                for item in items {
                    let id = item.as_i64().ok_or(LogicError::BadRequest)?;
                    let p = self.post(id);
                    let blob = Self::post_blob(id, &p);
                    self.post_accesses(id, blob.len() as u64, AccessKind::Load, &mut accesses);
                    cycles += c.read_posts_per_post + milli(c.post_mc_per_byte, blob.len());
                    blobs.push(Value::Bytes(blob));
                }
                (vec![(1, Value::List { elem: FieldType::Bytes, items: blobs })], cycles)
            }
            (Service::UniqueId, method_ids::COMPOSE_UNIQUE_ID) => {
                self.next_id += 1;
                (vec![(1, Value::I64(UID_BASE + self.next_id))], c.compose_unique_id)
            }
            _ => return Err(LogicError::BadRequest),
        };
        Ok(LogicOutcome { response: RpcMessage::response(req.method_id, req.seq_id, fields), cycles, accesses })
    }
}
