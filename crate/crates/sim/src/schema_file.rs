//! Text schema files, one service per file:
//!
//! ```text
//! service memcached
//!
//! method 1 GET
//!   request 1 key bytes
//!   response 1 value bytes
//! ```
//!
//! Blank lines and `#` comments are ignored. Field lines belong to the most
//! recent `method` line; types use the `list<...>` notation.

use std::fmt::Write;

use arcalis_core::wire::{FieldSchema, FieldType, MethodSchema, ServiceSchema};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaFileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn syntax(line: usize, msg: impl Into<String>) -> SchemaFileError {
    SchemaFileError::Syntax { line, msg: msg.into() }
}

pub fn parse(text: &str) -> Result<ServiceSchema, SchemaFileError> {
    let mut service: Option<String> = None;
    let mut methods: Vec<MethodSchema> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words[0] {
            "service" => {
                if service.is_some() {
                    return Err(syntax(n, "only one service per file"));
                }
                let [_, name] = words[..] else { return Err(syntax(n, "expected: service <name>")) };
                service = Some(name.to_string());
            }
            "method" => {
                let [_, id, name] = words[..] else { return Err(syntax(n, "expected: method <id> <name>")) };
                let method_id = id.parse().map_err(|_| syntax(n, format!("bad method id {id:?}")))?;
                methods.push(MethodSchema { method_id, name: name.into(), request: vec![], response: vec![] });
            }
            dir @ ("request" | "response") => {
                let [_, id, name, ty] = words[..] else {
                    return Err(syntax(n, format!("expected: {dir} <field id> <name> <type>")));
                };
                let field_id = id.parse().map_err(|_| syntax(n, format!("bad field id {id:?}")))?;
                let ty = FieldType::parse(ty).ok_or_else(|| syntax(n, format!("unknown type {ty:?}")))?;
                let m = methods.last_mut().ok_or_else(|| syntax(n, "field before any method"))?;
                let f = FieldSchema::new(field_id, name, ty);
                if dir == "request" {
                    m.request.push(f)
                } else {
                    m.response.push(f)
                }
            }
            other => return Err(syntax(n, format!("unknown directive {other:?}"))),
        }
    }
    let name = service.ok_or_else(|| SchemaFileError::Invalid("missing service line".into()))?;
    ServiceSchema::new(&name, methods).map_err(|e| SchemaFileError::Invalid(e.to_string()))
}

pub fn format(schema: &ServiceSchema) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "service {}", schema.service_name);
    for m in &schema.methods {
        let _ = writeln!(o, "\nmethod {} {}", m.method_id, m.name);
        for (dir, fields) in [("request", &m.request), ("response", &m.response)] {
            for f in fields {
                let _ = writeln!(o, "  {dir} {} {} {}", f.field_id, f.name, f.ty);
            }
        }
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;
    use arcalis_core::wire::Service;

    #[test]
    fn builtin_schemas_round_trip() {
        for s in Service::ALL {
            let schema = s.schema();
            assert_eq!(parse(&format(&schema)).unwrap(), schema);
        }
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse("service x\nmethod 1 A\n  request 1 k float\n").unwrap_err();
        assert_eq!(e, SchemaFileError::Syntax { line: 3, msg: "unknown type \"float\"".into() });
        assert!(matches!(parse("method 1 A\n"), Err(SchemaFileError::Invalid(_))));
        assert!(matches!(parse("service x\n  request 1 k i64\n"), Err(SchemaFileError::Syntax { line: 2, .. })));
    }
}
