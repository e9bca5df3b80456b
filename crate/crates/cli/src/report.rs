//! Versioned JSON envelopes.
//!
//! Every JSON output is `{"schema": SCHEMA, "command": ..., "result": ...}`.
//! Reports carry no timestamps or host details, so identical inputs give
//! identical bytes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use saatrace::certify::Certificate;

pub const SCHEMA: &str = "saatrace/1";

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema: &'static str,
    command: &'a str,
    result: &'a T,
}

pub fn to_json<T: Serialize>(command: &str, result: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope {
        schema: SCHEMA,
        command,
        result,
    })?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

/// The certificate inside any JSON document that holds one: a bare
/// certificate, or one reachable through `result` and `certificate` keys.
pub fn find_certificate(v: &Value) -> Option<Certificate> {
    if let Ok(c) = serde_json::from_value::<Certificate>(v.clone()) {
        return Some(c);
    }
    ["result", "certificate"]
        .iter()
        .filter_map(|k| v.get(k))
        .find_map(find_certificate)
}
