//! Deterministic CSV and JSON writers. CSV: '#'-prefixed metadata lines, one
//! header row, comma separation, LF endings. JSON: fixed key order, "inf"
//! sentinel strings for infinities.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip decimal; JSON-safe sentinel for non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone)]
pub enum JsonValue {
    Number(f64),
    Integer(i64),
    Text(String),
    Bool(bool),
    List(Vec<JsonValue>),
}

impl JsonValue {
    fn render(&self, out: &mut String) {
        match self {
            JsonValue::Number(v) => {
                if v.is_finite() {
                    let _ = write!(out, "{v}");
                } else {
                    let _ = write!(out, "\"{}\"", fmt_f64(*v));
                }
            }
            JsonValue::Integer(v) => {
                let _ = write!(out, "{v}");
            }
            JsonValue::Text(s) => {
                let _ = write!(out, "\"{}\"", escape(s));
            }
            JsonValue::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            JsonValue::List(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.render(out);
                }
                out.push(']');
            }
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Key order is the insertion order, so repeated runs emit identical bytes.
pub fn write_json(path: &Path, pairs: &[(&str, JsonValue)]) -> Result<()> {
    let mut out = String::from("{\n");
    for (i, (key, value)) in pairs.iter().enumerate() {
        let _ = write!(out, "  \"{}\": ", escape(key));
        value.render(&mut out);
        if i + 1 < pairs.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("}\n");
    fs::write(path, out)?;
    Ok(())
}

pub fn write_csv(
    path: &Path,
    metadata: &[(&str, String)],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k} = {v}");
    }
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    fs::write(path, out)?;
    Ok(())
}
