//! Flattened in-memory records exchanged through AppRecv and AppResp.
//!
//! A record is what the application reads and writes instead of wire bytes:
//! an 8-byte header followed by the field values in schema order, without
//! tags. Integers are little-endian, byte strings are `[len u32][data]` and
//! lists are `[count u32][elems]`.
//!
//! ```text
//! [method_id u8][direction u8][field_count u16][seq_id u32][values...]
//! ```

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::wire::{Direction, FieldType, RpcMessage, ServiceSchema, Value};

pub const RECORD_HEADER: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordError {
    #[error("record truncated")]
    Truncated,
    #[error("record names unknown method {0}")]
    UnknownMethod(u8),
    #[error("record has {found} fields, schema expects {expected}")]
    FieldCount { expected: usize, found: usize },
    #[error("record value is malformed")]
    Malformed,
    #[error("record has trailing bytes")]
    Trailing,
}

pub fn encode_record(msg: &RpcMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(RECORD_HEADER + 16 * msg.fields.len());
    out.push(msg.method_id);
    out.push(msg.direction as u8);
    out.extend_from_slice(&(msg.fields.len() as u16).to_le_bytes());
    out.extend_from_slice(&msg.seq_id.to_le_bytes());
    for (_, v) in &msg.fields {
        put(v, &mut out);
    }
    out
}

fn put(v: &Value, out: &mut Vec<u8>) {
    match v {
        Value::Bool(b) => out.push(*b as u8),
        Value::I8(x) => out.push(*x as u8),
        Value::I16(x) => out.extend_from_slice(&x.to_le_bytes()),
        Value::I32(x) => out.extend_from_slice(&x.to_le_bytes()),
        Value::I64(x) => out.extend_from_slice(&x.to_le_bytes()),
        Value::Bytes(b) => {
            out.extend_from_slice(&(b.len() as u32).to_le_bytes());
            out.extend_from_slice(b);
        }
        Value::String(s) => {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        Value::List { items, .. } => {
            out.extend_from_slice(&(items.len() as u32).to_le_bytes());
            for item in items {
                put(item, out);
            }
        }
    }
}

/// The seq id stored in a record header, if the header is present.
pub fn record_seq(bytes: &[u8]) -> Option<u32> {
    bytes.get(4..8).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

pub fn decode_record(bytes: &[u8], schema: &ServiceSchema) -> Result<RpcMessage, RecordError> {
    if bytes.len() < RECORD_HEADER {
        return Err(RecordError::Truncated);
    }
    let method_id = bytes[0];
    let direction = match bytes[1] {
        0 => Direction::Request,
        1 => Direction::Response,
        _ => return Err(RecordError::Malformed),
    };
    let count = u16::from_le_bytes([bytes[2], bytes[3]]) as usize;
    let seq_id = record_seq(bytes).unwrap();
    let method = schema.method(method_id).ok_or(RecordError::UnknownMethod(method_id))?;
    let want = if direction == Direction::Request { &method.request } else { &method.response };
    if count != want.len() {
        return Err(RecordError::FieldCount { expected: want.len(), found: count });
    }
    let mut pos = RECORD_HEADER;
    let mut fields = Vec::with_capacity(want.len());
    for f in want {
        fields.push((f.field_id, take(bytes, &mut pos, &f.ty)?));
    }
    if pos != bytes.len() {
        return Err(RecordError::Trailing);
    }
    Ok(RpcMessage { seq_id, method_id, direction, fields })
}

fn slice<'a>(b: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8], RecordError> {
    let end = pos.checked_add(n).filter(|&e| e <= b.len()).ok_or(RecordError::Truncated)?;
    let s = &b[*pos..end];
    *pos = end;
    Ok(s)
}

fn take(b: &[u8], pos: &mut usize, ty: &FieldType) -> Result<Value, RecordError> {
    let mut arr = |n: usize| slice(b, pos, n);
    Ok(match ty {
        FieldType::Bool => match arr(1)?[0] {
            0 => Value::Bool(false),
            1 => Value::Bool(true),
            _ => return Err(RecordError::Malformed),
        },
        FieldType::I8 => Value::I8(arr(1)?[0] as i8),
        FieldType::I16 => Value::I16(i16::from_le_bytes(arr(2)?.try_into().unwrap())),
        FieldType::I32 => Value::I32(i32::from_le_bytes(arr(4)?.try_into().unwrap())),
        FieldType::I64 => Value::I64(i64::from_le_bytes(arr(8)?.try_into().unwrap())),
        FieldType::Bytes | FieldType::String => {
            let n = u32::from_le_bytes(arr(4)?.try_into().unwrap()) as usize;
            let data = slice(b, pos, n)?;
            if *ty == FieldType::Bytes {
                Value::Bytes(data.to_vec())
            } else {
                Value::String(String::from(core::str::from_utf8(data).map_err(|_| RecordError::Malformed)?))
            }
        }
        FieldType::List(elem) => {
            let n = u32::from_le_bytes(arr(4)?.try_into().unwrap()) as usize;
            if n > b.len() {
                return Err(RecordError::Truncated);
            }
            let mut items = Vec::with_capacity(n);
            for _ in 0..n {
                items.push(take(b, pos, elem)?);
            }
            Value::List { elem: (**elem).clone(), items }
        }
    })
}
