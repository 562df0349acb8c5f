use std::path::PathBuf;

use arcalis_core::wire::{FieldSchema, FieldType, MethodSchema, Service, ServiceSchema};
use arcalis_sim::schema_file::{format, parse};
use proptest::prelude::*;

fn schemas_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

#[test]
fn shipped_files_match_builtin_schemas() {
    for s in Service::ALL {
        let path = schemas_dir().join(format!("{}.schema", s.name()));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(parse(&text).unwrap(), s.schema(), "{}", path.display());
    }
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let text = "# ids\nservice ids   # one method\n\nmethod 1 Next\n  response 1 id i64\n";
    let s = parse(text).unwrap();
    assert_eq!(s.service_name, "ids");
    assert_eq!(s.methods[0].response, vec![FieldSchema::new(1, "id", FieldType::I64)]);
}

#[test]
fn duplicate_ids_are_rejected() {
    assert!(parse("service a\nmethod 1 X\nmethod 1 Y\n").is_err());
    assert!(parse("service a\nmethod 1 X\n  request 2 a i8\n  request 2 b i8\n").is_err());
    assert!(parse("service a\nservice b\n").is_err());
    assert!(parse("service a\n").is_err());
}

fn field_type() -> impl Strategy<Value = FieldType> {
    let leaf = prop_oneof![
        Just(FieldType::Bool),
        Just(FieldType::I8),
        Just(FieldType::I16),
        Just(FieldType::I32),
        Just(FieldType::I64),
        Just(FieldType::Bytes),
        Just(FieldType::String),
    ];
    leaf.prop_recursive(3, 8, 1, |inner| inner.prop_map(FieldType::list_of))
}

fn fields() -> impl Strategy<Value = Vec<FieldSchema>> {
    proptest::collection::btree_map(any::<u16>(), ("[a-z][a-z0-9_]{0,8}", field_type()), 0..6)
        .prop_map(|m| m.into_iter().map(|(id, (n, t))| FieldSchema::new(id, &n, t)).collect())
}

fn schema() -> impl Strategy<Value = ServiceSchema> {
    let method = ("[A-Z][A-Za-z]{0,10}", fields(), fields());
    ("[a-z][a-z_]{0,10}", proptest::collection::btree_map(any::<u8>(), method, 1..5)).prop_map(|(name, ms)| {
        let methods = ms
            .into_iter()
            .map(|(method_id, (name, request, response))| MethodSchema { method_id, name, request, response })
            .collect();
        ServiceSchema::new(&name, methods).unwrap()
    })
}

proptest! {
    #[test]
    fn format_then_parse_is_identity(s in schema()) {
        prop_assert_eq!(parse(&format(&s)).unwrap(), s);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "(service|method|request|response|[0-9]+|[a-z<>]+| |\n)*") {
        let _ = parse(&text);
    }
}
