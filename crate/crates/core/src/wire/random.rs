//! Random schema-valid messages for round-trip testing and fuzzing.

use alloc::string::String;
use alloc::vec::Vec;

use super::{Direction, FieldType, MethodSchema, RpcMessage, ServiceSchema, Value};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug)]
pub struct RandomLimits {
    pub max_bytes: usize,
    pub max_list: usize,
}

impl Default for RandomLimits {
    fn default() -> Self {
        RandomLimits { max_bytes: 96, max_list: 6 }
    }
}

pub fn random_value(ty: &FieldType, rng: &mut SimRng, limits: RandomLimits) -> Value {
    match ty {
        FieldType::Bool => Value::Bool(rng.next_u32() & 1 == 1),
        FieldType::I8 => Value::I8(rng.next_u32() as i8),
        FieldType::I16 => Value::I16(rng.next_u32() as i16),
        FieldType::I32 => Value::I32(rng.next_u32() as i32),
        FieldType::I64 => Value::I64(rng.next_u64() as i64),
        FieldType::Bytes => {
            let mut b = alloc::vec![0u8; rng.below(limits.max_bytes as u64 + 1) as usize];
            rng.fill_bytes(&mut b);
            Value::Bytes(b)
        }
        FieldType::String => {
            let n = rng.below(limits.max_bytes as u64 + 1) as usize;
            let s: String = (0..n).map(|_| char::from(b' ' + rng.below(95) as u8)).collect();
            Value::String(s)
        }
        FieldType::List(elem) => {
            let n = rng.below(limits.max_list as u64 + 1) as usize;
            let items: Vec<Value> = (0..n).map(|_| random_value(elem, rng, limits)).collect();
            Value::List { elem: (**elem).clone(), items }
        }
    }
}

pub fn random_message_for(
    method: &MethodSchema,
    direction: Direction,
    rng: &mut SimRng,
    limits: RandomLimits,
) -> RpcMessage {
    let fields = if direction == Direction::Request { &method.request } else { &method.response };
    RpcMessage {
        seq_id: rng.next_u32(),
        method_id: method.method_id,
        direction,
        fields: fields.iter().map(|f| (f.field_id, random_value(&f.ty, rng, limits))).collect(),
    }
}

/// A uniformly chosen method and direction of `schema`, filled with random
/// values.
pub fn random_message(schema: &ServiceSchema, rng: &mut SimRng, limits: RandomLimits) -> RpcMessage {
    let method = &schema.methods[rng.below(schema.methods.len() as u64) as usize];
    let dir = if rng.next_u32() & 1 == 0 { Direction::Request } else { Direction::Response };
    random_message_for(method, dir, rng, limits)
}
