//! Service schemas: methods, typed fields and the three shipped services.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// On-wire type tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum WireType {
    Bool = 1,
    I8 = 2,
    I16 = 3,
    I32 = 4,
    I64 = 5,
    Bytes = 6,
    String = 7,
    List = 8,
}

impl WireType {
    pub fn from_u8(b: u8) -> Option<WireType> {
        Some(match b {
            1 => WireType::Bool,
            2 => WireType::I8,
            3 => WireType::I16,
            4 => WireType::I32,
            5 => WireType::I64,
            6 => WireType::Bytes,
            7 => WireType::String,
            8 => WireType::List,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            WireType::Bool => "bool",
            WireType::I8 => "i8",
            WireType::I16 => "i16",
            WireType::I32 => "i32",
            WireType::I64 => "i64",
            WireType::Bytes => "bytes",
            WireType::String => "string",
            WireType::List => "list",
        }
    }
}

/// A field's declared type. Lists carry their element type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldType {
    Bool,
    I8,
    I16,
    I32,
    I64,
    Bytes,
    String,
    List(Box<FieldType>),
}

impl FieldType {
    pub fn wire_type(&self) -> WireType {
        match self {
            FieldType::Bool => WireType::Bool,
            FieldType::I8 => WireType::I8,
            FieldType::I16 => WireType::I16,
            FieldType::I32 => WireType::I32,
            FieldType::I64 => WireType::I64,
            FieldType::Bytes => WireType::Bytes,
            FieldType::String => WireType::String,
            FieldType::List(_) => WireType::List,
        }
    }

    pub fn list_of(elem: FieldType) -> FieldType {
        FieldType::List(Box::new(elem))
    }

    /// Parse the textual form used by schema files: `i64`, `bytes`,
    /// `list<i64>`, `list<list<bool>>`.
    pub fn parse(s: &str) -> Option<FieldType> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("list<").and_then(|r| r.strip_suffix('>')) {
            return FieldType::parse(inner).map(FieldType::list_of);
        }
        Some(match s {
            "bool" => FieldType::Bool,
            "i8" => FieldType::I8,
            "i16" => FieldType::I16,
            "i32" => FieldType::I32,
            "i64" => FieldType::I64,
            "bytes" => FieldType::Bytes,
            "string" => FieldType::String,
            _ => return None,
        })
    }
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldType::List(inner) => write!(f, "list<{inner}>"),
            other => f.write_str(other.wire_type().name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSchema {
    pub field_id: u16,
    pub name: String,
    pub ty: FieldType,
}

impl FieldSchema {
    pub fn new(field_id: u16, name: &str, ty: FieldType) -> Self {
        FieldSchema { field_id, name: name.to_string(), ty }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSchema {
    pub method_id: u8,
    pub name: String,
    pub request: Vec<FieldSchema>,
    pub response: Vec<FieldSchema>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceSchema {
    pub service_name: String,
    pub methods: Vec<MethodSchema>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("empty name in {0}")]
    EmptyName(String),
    #[error("duplicate method id {0}")]
    DuplicateMethod(u8),
    #[error("duplicate field id {field_id} in method {method}")]
    DuplicateField { method: String, field_id: u16 },
    #[error("service {0} has no methods")]
    NoMethods(String),
}

impl ServiceSchema {
    pub fn new(service_name: &str, methods: Vec<MethodSchema>) -> Result<Self, SchemaError> {
        let schema = ServiceSchema { service_name: service_name.to_string(), methods };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.service_name.is_empty() {
            return Err(SchemaError::EmptyName("service".into()));
        }
        if self.methods.is_empty() {
            return Err(SchemaError::NoMethods(self.service_name.clone()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if m.name.is_empty() {
                return Err(SchemaError::EmptyName(alloc::format!("method {}", m.method_id)));
            }
            if self.methods[..i].iter().any(|o| o.method_id == m.method_id) {
                return Err(SchemaError::DuplicateMethod(m.method_id));
            }
            for fields in [&m.request, &m.response] {
                for (j, f) in fields.iter().enumerate() {
                    if f.name.is_empty() {
                        return Err(SchemaError::EmptyName(alloc::format!("{}.{}", m.name, f.field_id)));
                    }
                    if fields[..j].iter().any(|o| o.field_id == f.field_id) {
                        return Err(SchemaError::DuplicateField { method: m.name.clone(), field_id: f.field_id });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn method(&self, method_id: u8) -> Option<&MethodSchema> {
        self.methods.iter().find(|m| m.method_id == method_id)
    }

    pub fn method_by_name(&self, name: &str) -> Option<&MethodSchema> {
        self.methods.iter().find(|m| m.name == name)
    }
}

/// The three services the simulator ships with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Service {
    Memcached,
    PostStorage,
    UniqueId,
}

impl Service {
    pub const ALL: [Service; 3] = [Service::Memcached, Service::PostStorage, Service::UniqueId];

    pub fn name(self) -> &'static str {
        match self {
            Service::Memcached => "memcached",
            Service::PostStorage => "post_storage",
            Service::UniqueId => "unique_id",
        }
    }

    pub fn from_name(name: &str) -> Option<Service> {
        Service::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn schema(self) -> ServiceSchema {
        match self {
            Service::Memcached => memcached_schema(),
            Service::PostStorage => post_storage_schema(),
            Service::UniqueId => unique_id_schema(),
        }
    }
}

pub mod method_ids {
    pub const MEMC_GET: u8 = 1;
    pub const MEMC_SET: u8 = 2;
    pub const STORE_POST: u8 = 1;
    pub const READ_POST: u8 = 2;
    pub const READ_POSTS: u8 = 3;
    pub const COMPOSE_UNIQUE_ID: u8 = 1;
}

fn method(id: u8, name: &str, request: Vec<FieldSchema>, response: Vec<FieldSchema>) -> MethodSchema {
    MethodSchema { method_id: id, name: name.to_string(), request, response }
}

pub fn memcached_schema() -> ServiceSchema {
    use FieldType::*;
    ServiceSchema::new(
        "memcached",
        vec![
            method(
                method_ids::MEMC_GET,
                "GET",
                vec![FieldSchema::new(1, "key", Bytes)],
                vec![FieldSchema::new(1, "value", Bytes)],
            ),
            method(
                method_ids::MEMC_SET,
                "SET",
                vec![FieldSchema::new(1, "key", Bytes), FieldSchema::new(2, "value", Bytes)],
                vec![FieldSchema::new(1, "stored", Bool)],
            ),
        ],
    )
    .expect("builtin schema is valid")
}

pub fn post_storage_schema() -> ServiceSchema {
    use FieldType::*;
    let post_fields = || {
        vec![
            FieldSchema::new(2, "post_id", I64),
            FieldSchema::new(3, "creator_id", I64),
            FieldSchema::new(4, "timestamp", I64),
            FieldSchema::new(5, "text", String),
        ]
    };
    let mut store_req = vec![FieldSchema::new(1, "req_id", I64)];
    store_req.extend(post_fields());
    ServiceSchema::new(
        "post_storage",
        vec![
            method(method_ids::STORE_POST, "StorePost", store_req, vec![FieldSchema::new(1, "ok", Bool)]),
            method(
                method_ids::READ_POST,
                "ReadPost",
                vec![FieldSchema::new(1, "req_id", I64), FieldSchema::new(2, "post_id", I64)],
                post_fields(),
            ),
            method(
                method_ids::READ_POSTS,
                "ReadPosts",
                vec![FieldSchema::new(1, "req_id", I64), FieldSchema::new(2, "post_ids", FieldType::list_of(I64))],
                vec![FieldSchema::new(1, "posts", FieldType::list_of(Bytes))],
            ),
        ],
    )
    .expect("builtin schema is valid")
}

pub fn unique_id_schema() -> ServiceSchema {
    ServiceSchema::new(
        "unique_id",
        vec![method(
            method_ids::COMPOSE_UNIQUE_ID,
            "ComposeUniqueId",
            vec![],
            vec![FieldSchema::new(1, "id", FieldType::I64)],
        )],
    )
    .expect("builtin schema is valid")
}
