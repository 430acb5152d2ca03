//! Deterministic report assembly and serialization.
//!
//! Reports must be byte-identical for identical (inputs, seed, budget,
//! version), so the writer renders objects with sorted keys and every float
//! with 17 significant digits (exact f64 round-trip). Non-finite bounds are
//! encoded as the string "inf" before serialization; wall time is kept out
//! of the report and shown only in the human-readable table.

use serde_json::{Map, Value};

pub const SCHEMA_NAME: &str = "gamma-factor-report";
pub const SCHEMA_VERSION: u64 = 1;

/// A finite float or the "inf" tag.
pub fn bound_value(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String("inf".into())
    }
}

/// One named inequality check of a demo scenario.
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

pub struct Report {
    pub command: String,
    pub seed: u64,
    pub budget: usize,
    pub tol_psd: f64,
    pub tol_norm: f64,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub status: String,
}

impl Report {
    pub fn to_value(&self) -> Value {
        let mut root = Map::new();
        root.insert("schema".into(), Value::String(SCHEMA_NAME.into()));
        root.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
        root.insert(
            "tool_version".into(),
            Value::String(env!("CARGO_PKG_VERSION").into()),
        );
        root.insert("command".into(), Value::String(self.command.clone()));
        root.insert("seed".into(), Value::from(self.seed));
        root.insert("budget".into(), Value::from(self.budget as u64));
        let mut tol = Map::new();
        tol.insert("psd".into(), Value::from(self.tol_psd));
        tol.insert("norm".into(), Value::from(self.tol_norm));
        root.insert("tolerances".into(), Value::Object(tol));
        root.insert("inputs".into(), self.inputs.clone());
        root.insert("results".into(), self.results.clone());
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                let mut m = Map::new();
                m.insert("name".into(), Value::String(c.name.clone()));
                m.insert("passed".into(), Value::Bool(c.passed));
                m.insert("detail".into(), c.detail.clone());
                Value::Object(m)
            })
            .collect();
        root.insert("checks".into(), Value::Array(checks));
        root.insert("status".into(), Value::String(self.status.clone()));
        Value::Object(root)
    }

    /// Deterministic bytes of the report.
    pub fn render(&self) -> String {
        let mut out = String::new();
        write_value(&self.to_value(), 0, &mut out);
        out.push('\n');
        out
    }
}

fn write_float(x: f64, out: &mut String) {
    // 17 significant digits round-trip every f64 exactly.
    out.push_str(&format!("{:.16e}", x));
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                write_float(n.as_f64().unwrap(), out);
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent + 1));
                write_value(item, indent + 1, out);
            }
            out.push('\n');
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            // serde_json's map is BTree-backed: iteration is key-sorted.
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent + 1));
                out.push_str(&serde_json::to_string(key).unwrap());
                out.push_str(": ");
                write_value(item, indent + 1, out);
            }
            out.push('\n');
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
    }
}

/// Convert any serializable payload into a report-safe JSON value
/// (non-finite floats are not representable in payloads that reach here;
/// interval bounds go through [`bound_value`] first).
pub fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report payloads serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_render_with_17_digits() {
        let mut out = String::new();
        write_value(&Value::from(0.1f64), 0, &mut out);
        assert_eq!(out, "1.0000000000000001e-1");
        let parsed: f64 = out.parse().unwrap();
        assert_eq!(parsed, 0.1);
    }

    #[test]
    fn objects_render_sorted_and_stable() {
        let v: Value = serde_json::from_str(r#"{"b":1,"a":[2.5,{"z":true,"y":null}]}"#).unwrap();
        let mut out = String::new();
        write_value(&v, 0, &mut out);
        let expected = "{\n  \"a\": [\n    2.5000000000000000e0,\n    {\n      \"y\": null,\n      \"z\": true\n    }\n  ],\n  \"b\": 1\n}";
        assert_eq!(out, expected);
    }

    #[test]
    fn infinite_bounds_become_tags() {
        assert_eq!(bound_value(f64::INFINITY), Value::String("inf".into()));
        assert_eq!(bound_value(2.0), Value::from(2.0));
    }
}
