//! Canonical record encoding: compact UTF-8 JSON, object keys sorted
//! lexicographically, floats in shortest round-trip form, timestamps as
//! RFC 3339 UTC. Equal records always encode to equal bytes.

use serde_json::Value;

use super::records::Record;
use super::validate::{validate, Resolver, ValidationReport};

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("record is invalid: {0}")]
    Invalid(ValidationReport),
    #[error("malformed record: {0}")]
    Malformed(#[from] serde_json::Error),
}

/// Writes `value` as canonical JSON. Key order of the input does not matter.
pub fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&n.to_string()),
        Value::String(s) => write_str(s, out),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut entries: Vec<_> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            out.push('{');
            for (i, (k, v)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_str(k, out);
                out.push(':');
                write_canonical(v, out);
            }
            out.push('}');
        }
    }
}

fn write_str(s: &str, out: &mut String) {
    // serde_json's string escaping is already minimal and deterministic
    out.push_str(&serde_json::to_string(s).expect("string serialization cannot fail"));
}

pub fn canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

/// Encodes the record envelope without validating it.
///
/// Fails only for values JSON cannot carry (non-finite floats).
pub fn encode(record: &Record) -> Result<String, CodecError> {
    let value = serde_json::to_value(record)?;
    if has_non_finite(record) {
        return Err(CodecError::Invalid(nan_report()));
    }
    Ok(canonical_string(&value))
}

// serde_json maps NaN and infinities to null; catch that instead of
// silently writing a lossy encoding.
fn has_non_finite(record: &Record) -> bool {
    match record {
        Record::Evaluation(e) => e.metrics.iter().any(|m| !m.value.is_finite()),
        Record::Prediction(p) => p.predicted.iter().any(|s| !s.score.is_finite()),
        _ => false,
    }
}

fn nan_report() -> ValidationReport {
    ValidationReport {
        violations: vec![super::Violation {
            path: "value".into(),
            reason: "value not finite".into(),
        }],
    }
}

/// Canonical bytes of a valid record; rejects records that fail validation.
pub fn canonical_bytes(record: &Record, resolver: &dyn Resolver) -> Result<Vec<u8>, CodecError> {
    let report = validate(record, resolver);
    if !report.is_valid() {
        return Err(CodecError::Invalid(report));
    }
    Ok(encode(record)?.into_bytes())
}

pub fn decode(bytes: &[u8]) -> Result<Record, CodecError> {
    Ok(serde_json::from_slice(bytes)?)
}
