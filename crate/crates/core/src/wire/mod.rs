//! Length-prefixed binary wire format for RPC messages.
//!
//! Frame layout (all multi-byte integers big-endian):
//!
//! ```text
//! [len: u32][version: u8 = 0x01][direction: u8][method_id: u8][seq_id: u32]
//! [field]* [STOP = 0x00]
//!
//! field   = [wire_type: u8][field_id: u16][payload]
//! payload = bool/i8: 1 byte, i16: 2, i32: 4, i64: 8
//!         | bytes/string: [len: u32][data]
//!         | list: [elem_type: u8][count: u32][elem payload]*
//! ```
//!
//! `len` counts every byte after the length word. Fields appear in schema
//! order and every schema field is present, which makes the encoding
//! canonical.

pub mod random;
mod schema;

pub use random::*;
pub use schema::*;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VERSION: u8 = 0x01;
pub const STOP: u8 = 0x00;
/// Bytes before the first field: length word plus the fixed header.
pub const HEADER_LEN: usize = 11;
pub const DEFAULT_MAX_PAYLOAD: usize = 64 * 1024;

/// Field id carried by error frames.
pub const ERROR_FIELD_ID: u16 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Direction {
    Request = 0,
    Response = 1,
    /// Error status frame produced when a request cannot be processed.
    Error = 2,
}

impl Direction {
    fn from_u8(b: u8) -> Option<Direction> {
        match b {
            0 => Some(Direction::Request),
            1 => Some(Direction::Response),
            2 => Some(Direction::Error),
            _ => None,
        }
    }
}

/// Status codes carried in error frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(i32)]
pub enum ErrorCode {
    UnknownMethod = 1,
    MalformedFrame = 2,
    SchemaViolation = 3,
    BufferFull = 4,
}

impl ErrorCode {
    pub fn from_i32(v: i32) -> Option<ErrorCode> {
        Some(match v {
            1 => ErrorCode::UnknownMethod,
            2 => ErrorCode::MalformedFrame,
            3 => ErrorCode::SchemaViolation,
            4 => ErrorCode::BufferFull,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Value {
    Bool(bool),
    I8(i8),
    I16(i16),
    I32(i32),
    I64(i64),
    Bytes(Vec<u8>),
    String(String),
    List { elem: FieldType, items: Vec<Value> },
}

impl Value {
    pub fn matches(&self, ty: &FieldType) -> bool {
        match (self, ty) {
            (Value::Bool(_), FieldType::Bool)
            | (Value::I8(_), FieldType::I8)
            | (Value::I16(_), FieldType::I16)
            | (Value::I32(_), FieldType::I32)
            | (Value::I64(_), FieldType::I64)
            | (Value::Bytes(_), FieldType::Bytes)
            | (Value::String(_), FieldType::String) => true,
            (Value::List { elem, items }, FieldType::List(want)) => {
                elem == want.as_ref() && items.iter().all(|v| v.matches(want))
            }
            _ => false,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::I64(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Value::Bytes(b) => Some(b),
            Value::String(s) => Some(s.as_bytes()),
            _ => None,
        }
    }

    /// Number of items this value contributes to (de)serialization work:
    /// one per scalar, one per list element (recursively).
    pub fn item_count(&self) -> u32 {
        match self {
            Value::List { items, .. } => 1 + items.iter().map(Value::item_count).sum::<u32>(),
            _ => 1,
        }
    }

    fn payload_len(&self) -> usize {
        match self {
            Value::Bool(_) | Value::I8(_) => 1,
            Value::I16(_) => 2,
            Value::I32(_) => 4,
            Value::I64(_) => 8,
            Value::Bytes(b) => 4 + b.len(),
            Value::String(s) => 4 + s.len(),
            Value::List { items, .. } => 5 + items.iter().map(Value::payload_len).sum::<usize>(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RpcMessage {
    pub seq_id: u32,
    pub method_id: u8,
    pub direction: Direction,
    pub fields: Vec<(u16, Value)>,
}

impl RpcMessage {
    pub fn request(method_id: u8, seq_id: u32, fields: Vec<(u16, Value)>) -> Self {
        RpcMessage { seq_id, method_id, direction: Direction::Request, fields }
    }

    pub fn response(method_id: u8, seq_id: u32, fields: Vec<(u16, Value)>) -> Self {
        RpcMessage { seq_id, method_id, direction: Direction::Response, fields }
    }

    pub fn field(&self, field_id: u16) -> Option<&Value> {
        self.fields.iter().find(|(id, _)| *id == field_id).map(|(_, v)| v)
    }

    /// Encoded body length: fields plus the STOP byte.
    pub fn body_len(&self) -> usize {
        1 + self.fields.iter().map(|(_, v)| 3 + v.payload_len()).sum::<usize>()
    }

    pub fn frame_len(&self) -> usize {
        HEADER_LEN + self.body_len()
    }

    pub fn item_count(&self) -> u32 {
        self.fields.iter().map(|(_, v)| v.item_count()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct WireFrame(pub Vec<u8>);

impl WireFrame {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("schema violation: {0}")]
    SchemaViolation(&'static str),
    #[error("payload of {len} bytes exceeds the {max}-byte limit")]
    PayloadTooLarge { len: usize, max: usize },
    #[error("frame truncated: need {needed} bytes, have {available}")]
    TruncatedFrame { needed: usize, available: usize },
    #[error("unknown method id {0:#04x}")]
    UnknownMethod(u8),
    #[error("malformed field at offset {offset}: {reason}")]
    MalformedField { offset: usize, reason: &'static str },
    #[error("unsupported frame version {0:#04x}")]
    BadVersion(u8),
}

impl WireError {
    /// Status code reported to the client when a request fails to decode.
    pub fn error_code(&self) -> ErrorCode {
        match self {
            WireError::UnknownMethod(_) => ErrorCode::UnknownMethod,
            WireError::SchemaViolation(_) | WireError::PayloadTooLarge { .. } => ErrorCode::SchemaViolation,
            _ => ErrorCode::MalformedFrame,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub len: u32,
    pub method_id: u8,
    pub seq_id: u32,
    pub direction: Direction,
    pub body_offset: usize,
}

/// Codec limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Codec {
    pub max_payload: usize,
}

impl Default for Codec {
    fn default() -> Self {
        Codec { max_payload: DEFAULT_MAX_PAYLOAD }
    }
}

pub fn serialize(msg: &RpcMessage, schema: &ServiceSchema) -> Result<WireFrame, WireError> {
    Codec::default().serialize(msg, schema)
}

pub fn deserialize(frame: &[u8], schema: &ServiceSchema) -> Result<RpcMessage, WireError> {
    Codec::default().deserialize(frame, schema).map(|(m, _)| m)
}

/// Read the fixed header without touching the body.
pub fn parse_header(frame: &[u8]) -> Result<FrameHeader, WireError> {
    if frame.len() < HEADER_LEN {
        return Err(WireError::TruncatedFrame { needed: HEADER_LEN, available: frame.len() });
    }
    let len = u32::from_be_bytes([frame[0], frame[1], frame[2], frame[3]]);
    if frame[4] != VERSION {
        return Err(WireError::BadVersion(frame[4]));
    }
    let direction =
        Direction::from_u8(frame[5]).ok_or(WireError::MalformedField { offset: 5, reason: "bad direction" })?;
    let seq_id = u32::from_be_bytes([frame[7], frame[8], frame[9], frame[10]]);
    Ok(FrameHeader { len, method_id: frame[6], seq_id, direction, body_offset: HEADER_LEN })
}

/// Encode an error status frame for a request that could not be served.
pub fn serialize_error(method_id: u8, seq_id: u32, code: ErrorCode) -> WireFrame {
    let msg = RpcMessage {
        seq_id,
        method_id,
        direction: Direction::Error,
        fields: alloc::vec![(ERROR_FIELD_ID, Value::I32(code as i32))],
    };
    let mut out = Vec::with_capacity(msg.frame_len());
    write_frame(&msg, &mut out);
    WireFrame(out)
}

impl Codec {
    pub fn new(max_payload: usize) -> Self {
        Codec { max_payload }
    }

    pub fn validate(&self, msg: &RpcMessage, schema: &ServiceSchema) -> Result<(), WireError> {
        let method = schema.method(msg.method_id).ok_or(WireError::UnknownMethod(msg.method_id))?;
        let want = match msg.direction {
            Direction::Request => &method.request,
            Direction::Response => &method.response,
            Direction::Error => return Err(WireError::SchemaViolation("error frames are not schema messages")),
        };
        if want.len() != msg.fields.len() {
            return Err(WireError::SchemaViolation("field count differs from schema"));
        }
        for (f, (id, v)) in want.iter().zip(&msg.fields) {
            if f.field_id != *id {
                return Err(WireError::SchemaViolation("unknown or out-of-order field"));
            }
            if !v.matches(&f.ty) {
                return Err(WireError::SchemaViolation("value type mismatch"));
            }
            self.check_sizes(v)?;
        }
        Ok(())
    }

    fn check_sizes(&self, v: &Value) -> Result<(), WireError> {
        let len = match v {
            Value::Bytes(b) => b.len(),
            Value::String(s) => s.len(),
            Value::List { items, .. } => {
                for item in items {
                    self.check_sizes(item)?;
                }
                items.len()
            }
            _ => 0,
        };
        if len > self.max_payload {
            return Err(WireError::PayloadTooLarge { len, max: self.max_payload });
        }
        Ok(())
    }

    pub fn serialize(&self, msg: &RpcMessage, schema: &ServiceSchema) -> Result<WireFrame, WireError> {
        self.validate(msg, schema)?;
        let mut out = Vec::with_capacity(msg.frame_len());
        write_frame(msg, &mut out);
        debug_assert_eq!(out.len(), msg.frame_len());
        Ok(WireFrame(out))
    }

    /// Decode one frame from the front of `frame`; returns the message and
    /// the number of bytes consumed (`len + 4`).
    pub fn deserialize(&self, frame: &[u8], schema: &ServiceSchema) -> Result<(RpcMessage, usize), WireError> {
        let header = parse_header(frame)?;
        let total = header.len as usize + 4;
        if total < HEADER_LEN + 1 {
            return Err(WireError::MalformedField { offset: 0, reason: "length word too small" });
        }
        if frame.len() < total {
            return Err(WireError::TruncatedFrame { needed: total, available: frame.len() });
        }
        let frame = &frame[..total];
        let mut r = Reader { buf: frame, pos: HEADER_LEN, max_payload: self.max_payload };

        let fields = match header.direction {
            Direction::Error => {
                let v = r.read_field_value(ERROR_FIELD_ID, &FieldType::I32)?;
                alloc::vec![(ERROR_FIELD_ID, v)]
            }
            dir => {
                let method = schema.method(header.method_id).ok_or(WireError::UnknownMethod(header.method_id))?;
                let want = if dir == Direction::Request { &method.request } else { &method.response };
                let mut fields = Vec::with_capacity(want.len());
                for f in want {
                    fields.push((f.field_id, r.read_field_value(f.field_id, &f.ty)?));
                }
                fields
            }
        };
        let at = r.pos;
        if r.u8()? != STOP {
            return Err(WireError::MalformedField { offset: at, reason: "expected STOP" });
        }
        if r.pos != total {
            return Err(WireError::MalformedField { offset: r.pos, reason: "trailing bytes before frame end" });
        }
        let msg = RpcMessage { seq_id: header.seq_id, method_id: header.method_id, direction: header.direction, fields };
        Ok((msg, total))
    }
}

fn write_frame(msg: &RpcMessage, out: &mut Vec<u8>) {
    let len = (msg.frame_len() - 4) as u32;
    out.extend_from_slice(&len.to_be_bytes());
    out.push(VERSION);
    out.push(msg.direction as u8);
    out.push(msg.method_id);
    out.extend_from_slice(&msg.seq_id.to_be_bytes());
    for (id, v) in &msg.fields {
        out.push(value_wire_type(v) as u8);
        out.extend_from_slice(&id.to_be_bytes());
        write_payload(v, out);
    }
    out.push(STOP);
}

fn value_wire_type(v: &Value) -> WireType {
    match v {
        Value::Bool(_) => WireType::Bool,
        Value::I8(_) => WireType::I8,
        Value::I16(_) => WireType::I16,
        Value::I32(_) => WireType::I32,
        Value::I64(_) => WireType::I64,
        Value::Bytes(_) => WireType::Bytes,
        Value::String(_) => WireType::String,
        Value::List { .. } => WireType::List,
    }
}

fn write_payload(v: &Value, out: &mut Vec<u8>) {
    match v {
        Value::Bool(b) => out.push(*b as u8),
        Value::I8(x) => out.push(*x as u8),
        Value::I16(x) => out.extend_from_slice(&x.to_be_bytes()),
        Value::I32(x) => out.extend_from_slice(&x.to_be_bytes()),
        Value::I64(x) => out.extend_from_slice(&x.to_be_bytes()),
        Value::Bytes(b) => {
            out.extend_from_slice(&(b.len() as u32).to_be_bytes());
            out.extend_from_slice(b);
        }
        Value::String(s) => {
            out.extend_from_slice(&(s.len() as u32).to_be_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        Value::List { elem, items } => {
            out.push(elem.wire_type() as u8);
            out.extend_from_slice(&(items.len() as u32).to_be_bytes());
            for item in items {
                write_payload(item, out);
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    max_payload: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], WireError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(WireError::TruncatedFrame {
            needed: self.pos.saturating_add(n),
            available: self.buf.len(),
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        let mut a = [0u8; N];
        a.copy_from_slice(self.take(N)?);
        Ok(a)
    }

    fn read_field_value(&mut self, field_id: u16, ty: &FieldType) -> Result<Value, WireError> {
        let at = self.pos;
        let tag = self.u8()?;
        if tag == STOP {
            return Err(WireError::MalformedField { offset: at, reason: "missing field" });
        }
        if tag != ty.wire_type() as u8 {
            return Err(WireError::MalformedField { offset: at, reason: "wire type differs from schema" });
        }
        let id = u16::from_be_bytes(self.array()?);
        if id != field_id {
            return Err(WireError::MalformedField { offset: at, reason: "unexpected field id" });
        }
        self.read_payload(ty)
    }

    fn read_len(&mut self) -> Result<usize, WireError> {
        let at = self.pos;
        let len = u32::from_be_bytes(self.array()?) as usize;
        if len > self.max_payload {
            return Err(WireError::MalformedField { offset: at, reason: "length exceeds payload limit" });
        }
        Ok(len)
    }

    fn read_payload(&mut self, ty: &FieldType) -> Result<Value, WireError> {
        Ok(match ty {
            FieldType::Bool => {
                let at = self.pos;
                match self.u8()? {
                    0 => Value::Bool(false),
                    1 => Value::Bool(true),
                    _ => return Err(WireError::MalformedField { offset: at, reason: "bool out of range" }),
                }
            }
            FieldType::I8 => Value::I8(self.u8()? as i8),
            FieldType::I16 => Value::I16(i16::from_be_bytes(self.array()?)),
            FieldType::I32 => Value::I32(i32::from_be_bytes(self.array()?)),
            FieldType::I64 => Value::I64(i64::from_be_bytes(self.array()?)),
            FieldType::Bytes => {
                let n = self.read_len()?;
                Value::Bytes(self.take(n)?.to_vec())
            }
            FieldType::String => {
                let n = self.read_len()?;
                let at = self.pos;
                let raw = self.take(n)?;
                let s = core::str::from_utf8(raw)
                    .map_err(|_| WireError::MalformedField { offset: at, reason: "string is not UTF-8" })?;
                Value::String(s.into())
            }
            FieldType::List(elem) => {
                let at = self.pos;
                if self.u8()? != elem.wire_type() as u8 {
                    return Err(WireError::MalformedField { offset: at, reason: "list element type differs" });
                }
                let n = self.read_len()?;
                let mut items = Vec::with_capacity(n.min(1024));
                for _ in 0..n {
                    items.push(self.read_payload(elem)?);
                }
                Value::List { elem: (**elem).clone(), items }
            }
        })
    }
}

/// Per-stage byte and item counts that drive the timing models.
///
/// A request fills the receive-side entries, a response the send-side ones;
/// [`StageCosts::merge`] combines both halves of one RPC.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCosts {
    pub header_bytes: u32,
    pub dispatch_lookups: u32,
    pub deser_bytes: u32,
    pub deser_items: u32,
    pub ser_bytes: u32,
    pub ser_items: u32,
    pub resp_header_bytes: u32,
}

impl StageCosts {
    pub fn merge(self, other: StageCosts) -> StageCosts {
        StageCosts {
            header_bytes: self.header_bytes + other.header_bytes,
            dispatch_lookups: self.dispatch_lookups + other.dispatch_lookups,
            deser_bytes: self.deser_bytes + other.deser_bytes,
            deser_items: self.deser_items + other.deser_items,
            ser_bytes: self.ser_bytes + other.ser_bytes,
            ser_items: self.ser_items + other.ser_items,
            resp_header_bytes: self.resp_header_bytes + other.resp_header_bytes,
        }
    }
}

pub fn stage_costs(msg: &RpcMessage) -> StageCosts {
    let body = msg.body_len() as u32;
    let items = msg.item_count();
    match msg.direction {
        Direction::Request => StageCosts {
            header_bytes: HEADER_LEN as u32,
            dispatch_lookups: 1,
            deser_bytes: body,
            deser_items: items,
            ..StageCosts::default()
        },
        Direction::Response | Direction::Error => StageCosts {
            ser_bytes: body,
            ser_items: items,
            resp_header_bytes: HEADER_LEN as u32,
            ..StageCosts::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn uid_response(id: i64) -> RpcMessage {
        RpcMessage::response(method_ids::COMPOSE_UNIQUE_ID, 9, vec![(1, Value::I64(id))])
    }

    #[test]
    fn unique_id_response_frame_layout() {
        let f = serialize(&uid_response(0), &unique_id_schema()).unwrap();
        // len word + 7 header bytes + one i64 field (1 + 2 + 8) + STOP.
        assert_eq!(f.len(), 4 + 7 + 11 + 1);
        assert_eq!(&f.0[..4], &19u32.to_be_bytes());
        assert_eq!(f.0[4], VERSION);
        assert_eq!(f.0[5], Direction::Response as u8);
        assert_eq!(f.0[11], WireType::I64 as u8);
        assert_eq!(*f.0.last().unwrap(), STOP);
    }

    #[test]
    fn empty_message_covers_header_and_stop() {
        let m = RpcMessage::request(method_ids::COMPOSE_UNIQUE_ID, 1, vec![]);
        let f = serialize(&m, &unique_id_schema()).unwrap();
        assert_eq!(&f.0[..4], &8u32.to_be_bytes());
        assert_eq!(f.len(), 12);
    }

    #[test]
    fn round_trip_post_read_many() {
        let s = post_storage_schema();
        let ids = (0..10).map(Value::I64).collect();
        let m = RpcMessage::request(
            method_ids::READ_POSTS,
            77,
            vec![(1, Value::I64(5)), (2, Value::List { elem: FieldType::I64, items: ids })],
        );
        let f = serialize(&m, &s).unwrap();
        assert_eq!(deserialize(&f.0, &s).unwrap(), m);
    }

    #[test]
    fn serialize_rejects_schema_violations() {
        let s = memcached_schema();
        let wrong_type = RpcMessage::request(method_ids::MEMC_GET, 1, vec![(1, Value::I64(3))]);
        assert!(matches!(serialize(&wrong_type, &s), Err(WireError::SchemaViolation(_))));
        let unknown = RpcMessage::request(0x42, 1, vec![]);
        assert_eq!(serialize(&unknown, &s), Err(WireError::UnknownMethod(0x42)));
        let missing = RpcMessage::request(method_ids::MEMC_SET, 1, vec![(1, Value::Bytes(vec![1]))]);
        assert!(matches!(serialize(&missing, &s), Err(WireError::SchemaViolation(_))));
    }

    #[test]
    fn serialize_rejects_oversized_payload() {
        let s = memcached_schema();
        let m = RpcMessage::request(method_ids::MEMC_GET, 1, vec![(1, Value::Bytes(vec![0; 20]))]);
        assert_eq!(Codec::new(16).serialize(&m, &s), Err(WireError::PayloadTooLarge { len: 20, max: 16 }));
    }

    #[test]
    fn unknown_method_on_decode() {
        let s = memcached_schema();
        let mut f = serialize(&RpcMessage::request(method_ids::MEMC_GET, 1, vec![(1, Value::Bytes(vec![7]))]), &s)
            .unwrap()
            .0;
        f[6] = 0xEE;
        assert_eq!(deserialize(&f, &s), Err(WireError::UnknownMethod(0xEE)));
    }

    #[test]
    fn truncated_frames() {
        let s = memcached_schema();
        let f = serialize(&RpcMessage::request(method_ids::MEMC_GET, 1, vec![(1, Value::Bytes(vec![7; 16]))]), &s)
            .unwrap()
            .0;
        for cut in [0, 5, 10, 14, 20, f.len() - 1] {
            assert!(matches!(deserialize(&f[..cut], &s), Err(WireError::TruncatedFrame { .. })), "cut at {cut}");
        }
        assert!(matches!(parse_header(&f[..10]), Err(WireError::TruncatedFrame { .. })));
    }

    #[test]
    fn truncated_mid_field_with_consistent_length() {
        // Shrink the declared length too, so the field itself runs past the end.
        let s = memcached_schema();
        let mut f = serialize(&RpcMessage::request(method_ids::MEMC_GET, 1, vec![(1, Value::Bytes(vec![7; 16]))]), &s)
            .unwrap()
            .0;
        f.truncate(20);
        f[..4].copy_from_slice(&16u32.to_be_bytes());
        assert!(matches!(deserialize(&f, &s), Err(WireError::TruncatedFrame { .. })));
    }

    #[test]
    fn bad_version() {
        let mut f = serialize(&uid_response(1), &unique_id_schema()).unwrap().0;
        f[4] = 0x02;
        assert_eq!(parse_header(&f), Err(WireError::BadVersion(2)));
        assert_eq!(deserialize(&f, &unique_id_schema()), Err(WireError::BadVersion(2)));
    }

    #[test]
    fn malformed_fields() {
        let s = memcached_schema();
        let good =
            serialize(&RpcMessage::response(method_ids::MEMC_SET, 3, vec![(1, Value::Bool(true))]), &s).unwrap().0;
        let mut bad_bool = good.clone();
        bad_bool[14] = 9;
        assert!(matches!(deserialize(&bad_bool, &s), Err(WireError::MalformedField { .. })));
        let mut bad_tag = good.clone();
        bad_tag[11] = WireType::I32 as u8;
        assert!(matches!(deserialize(&bad_tag, &s), Err(WireError::MalformedField { .. })));
        let mut no_stop = good;
        *no_stop.last_mut().unwrap() = 0x11;
        assert!(matches!(deserialize(&no_stop, &s), Err(WireError::MalformedField { .. })));
    }

    #[test]
    fn deserialize_consumes_exactly_one_frame() {
        let s = unique_id_schema();
        let mut two = serialize(&uid_response(1), &s).unwrap().0;
        let first = two.len();
        two.extend(serialize(&uid_response(2), &s).unwrap().0);
        let (m, used) = Codec::default().deserialize(&two, &s).unwrap();
        assert_eq!(used, first);
        assert_eq!(m, uid_response(1));
    }

    #[test]
    fn header_parse_agrees_with_full_decode() {
        let s = memcached_schema();
        let m = RpcMessage::request(method_ids::MEMC_GET, 0xDEAD_BEEF, vec![(1, Value::Bytes(vec![1, 2]))]);
        let f = serialize(&m, &s).unwrap();
        let h = parse_header(&f.0).unwrap();
        let d = deserialize(&f.0, &s).unwrap();
        assert_eq!((h.method_id, h.seq_id, h.direction), (d.method_id, d.seq_id, d.direction));
        assert_eq!(h.body_offset, 11);
        assert_eq!(h.len as usize + 4, f.len());
    }

    #[test]
    fn error_frames_decode_without_schema_method() {
        let f = serialize_error(0xEE, 4, ErrorCode::UnknownMethod);
        let m = deserialize(&f.0, &memcached_schema()).unwrap();
        assert_eq!(m.direction, Direction::Error);
        assert_eq!(m.field(ERROR_FIELD_ID), Some(&Value::I32(ErrorCode::UnknownMethod as i32)));
    }

    #[test]
    fn stage_costs_empty_request_is_stop_only() {
        let m = RpcMessage::request(method_ids::COMPOSE_UNIQUE_ID, 1, vec![]);
        let c = stage_costs(&m);
        assert_eq!(c.deser_bytes, 1);
        assert_eq!(c.dispatch_lookups, 1);
        assert_eq!(c.header_bytes, 11);
    }

    #[test]
    fn stage_costs_get_response_with_8_byte_value() {
        let m = RpcMessage::response(method_ids::MEMC_GET, 1, vec![(1, Value::Bytes(vec![0; 8]))]);
        assert_eq!(stage_costs(&m).ser_bytes, 1 + 2 + 4 + 8 + 1);
    }

    #[test]
    fn stage_costs_match_serialized_body() {
        let s = memcached_schema();
        let m = RpcMessage::request(
            method_ids::MEMC_SET,
            1,
            vec![(1, Value::Bytes(vec![1; 16])), (2, Value::Bytes(vec![2; 32]))],
        );
        let f = serialize(&m, &s).unwrap();
        assert_eq!(stage_costs(&m).deser_bytes as usize, f.len() - HEADER_LEN);
    }
}
