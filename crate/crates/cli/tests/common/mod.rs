#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

pub fn qslice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qslice")).args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs and expects exit 0, returning standard output.
pub fn ok(args: &[&str]) -> String {
    let o = qslice(args);
    assert_eq!(o.status.code(), Some(0), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

pub fn schema(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(p).expect("schema exists")).expect("schema parses")
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "null" => v.is_null(),
        "boolean" => v.is_boolean(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_i64() || v.is_u64(),
        "array" => v.is_array(),
        "object" => v.is_object(),
        other => panic!("schema type `{other}` not supported"),
    }
}

/// Validates against the keyword subset the shipped schemas use: type,
/// enum, minimum, maximum, minItems, maxItems, items, properties, required
/// and additionalProperties. Returns the first violation.
pub fn validate(schema: &Value, v: &Value, path: &str) -> Result<(), String> {
    let s = schema.as_object().expect("schema is an object");
    for k in s.keys() {
        let known = [
            "$schema", "title", "type", "enum", "minimum", "maximum", "minItems", "maxItems", "items", "properties",
            "required", "additionalProperties",
        ];
        assert!(known.contains(&k.as_str()), "schema keyword `{k}` not supported by the test validator");
    }
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(t) => type_matches(t, v),
            Value::Array(ts) => ts.iter().any(|t| type_matches(t.as_str().unwrap(), v)),
            _ => panic!("bad type keyword"),
        };
        if !ok {
            return Err(format!("{path}: {v} is not of type {t}"));
        }
    }
    if let Some(Value::Array(opts)) = s.get("enum") {
        if !opts.contains(v) {
            return Err(format!("{path}: {v} not in enum"));
        }
    }
    if let Some(x) = v.as_f64() {
        if let Some(m) = s.get("minimum").and_then(Value::as_f64) {
            if x < m {
                return Err(format!("{path}: {x} < minimum {m}"));
            }
        }
        if let Some(m) = s.get("maximum").and_then(Value::as_f64) {
            if x > m {
                return Err(format!("{path}: {x} > maximum {m}"));
            }
        }
    }
    if let Value::Array(items) = v {
        if let Some(m) = s.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < m {
                return Err(format!("{path}: fewer than {m} items"));
            }
        }
        if let Some(m) = s.get("maxItems").and_then(Value::as_u64) {
            if (items.len() as u64) > m {
                return Err(format!("{path}: more than {m} items"));
            }
        }
        if let Some(sub) = s.get("items") {
            for (i, it) in items.iter().enumerate() {
                validate(sub, it, &format!("{path}[{i}]"))?;
            }
        }
    }
    if let Value::Object(map) = v {
        let props = s.get("properties").and_then(Value::as_object);
        if let Some(Value::Array(req)) = s.get("required") {
            for r in req {
                let r = r.as_str().unwrap();
                if !map.contains_key(r) {
                    return Err(format!("{path}: missing `{r}`"));
                }
            }
        }
        for (k, val) in map {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => validate(sub, val, &format!("{path}.{k}"))?,
                None => match s.get("additionalProperties") {
                    Some(Value::Bool(false)) => return Err(format!("{path}: unexpected `{k}`")),
                    Some(sub @ Value::Object(_)) => validate(sub, val, &format!("{path}.{k}"))?,
                    _ => {}
                },
            }
        }
    }
    Ok(())
}

pub fn assert_valid(name: &str, text: &str) -> Value {
    let v: Value = serde_json::from_str(text).unwrap_or_else(|e| panic!("{name}: not JSON ({e}): {text}"));
    if let Err(e) = validate(&schema(name), &v, "$") {
        panic!("{name}: {e}");
    }
    v
}

/// Parses CSV text into a header and rows of fields.
pub fn csv_table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().expect("header").iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.expect("record").iter().map(String::from).collect()).collect();
    (header, rows)
}
