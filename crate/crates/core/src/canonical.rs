//! Canonical JSON encoding.
//!
//! Every persisted artifact (graph, degrees, session, audit line, plan) goes
//! through [`to_canonical_string`]: object keys are sorted, there is no
//! insignificant whitespace, and floating-point numbers are printed with at
//! most nine significant digits. Values are [`quantize`]d before they enter
//! persisted state, so loading a file and writing it back is byte-identical.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Rounds `v` to nine significant digits.
///
/// Non-finite values pass through unchanged; callers validate finiteness.
/// Negative zero is normalized to zero.
pub fn quantize(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    let q: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Serializes `value` into its canonical JSON text.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let tree = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&tree, &mut out);
    Ok(out)
}

/// Canonical JSON followed by a trailing newline, the on-disk file form.
pub fn to_canonical_file<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut s = to_canonical_string(value)?;
    s.push('\n');
    Ok(s)
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let f = n.as_f64().unwrap_or(0.0);
                out.push_str(&format_float(f));
            }
        }
        Value::String(s) => {
            // serde_json's string escaping is already deterministic.
            out.push_str(&serde_json::to_string(s).expect("string serialization"));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serialization"));
                out.push(':');
                write_value(&map[k], out);
            }
            out.push('}');
        }
    }
}

fn format_float(f: f64) -> String {
    let q = quantize(f);
    // Display prints the shortest representation that round-trips, never
    // in exponent form, which keeps the output valid JSON.
    format!("{q}")
}
