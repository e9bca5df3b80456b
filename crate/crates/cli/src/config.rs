//! TOML run manifests.
//!
//! A manifest maps flag names to values. Top-level keys apply to every
//! subcommand; a table named after a subcommand applies to that subcommand
//! only and overrides top-level keys. Manifest entries are spliced into the
//! argument list right after the subcommand, ahead of the command-line flags,
//! and every subcommand lets later occurrences of a flag override earlier
//! ones, so command-line flags win. Unknown keys surface as unknown flags.

use std::ffi::OsString;
use std::path::Path;

use thiserror::Error;
use toml::{Table, Value};

pub const SUBCOMMANDS: [&str; 7] = ["certify", "estimate", "optimize", "validate", "oracle", "oed", "hyper"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config key '{key}': {message}")]
    Value { key: String, message: String },
    #[error("config table [{0}] is not a subcommand")]
    UnknownTable(String),
    #[error("--config needs a file path")]
    MissingPath,
}

fn scalar(key: &str, v: &Value) -> Result<String, ConfigError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        _ => Err(ConfigError::Value {
            key: key.into(),
            message: "expected a string or number".into(),
        }),
    }
}

fn push_entry(out: &mut Vec<OsString>, key: &str, v: &Value) -> Result<(), ConfigError> {
    let flag = format!("--{}", key.replace('_', "-"));
    match v {
        Value::Boolean(true) => out.push(flag.into()),
        Value::Boolean(false) => {}
        Value::Array(items) => {
            let parts: Result<Vec<String>, _> = items.iter().map(|x| scalar(key, x)).collect();
            out.push(flag.into());
            out.push(parts?.join(",").into());
        }
        other => {
            out.push(flag.into());
            out.push(scalar(key, other)?.into());
        }
    }
    Ok(())
}

/// Flags contributed by `table` to `subcommand`, in key order.
pub fn manifest_flags(table: &Table, subcommand: &str) -> Result<Vec<OsString>, ConfigError> {
    let mut out = Vec::new();
    let mut section = None;
    for (key, v) in table {
        match v {
            Value::Table(t) if SUBCOMMANDS.contains(&key.as_str()) => {
                if key == subcommand {
                    section = Some(t);
                }
            }
            Value::Table(_) => return Err(ConfigError::UnknownTable(key.clone())),
            _ => push_entry(&mut out, key, v)?,
        }
    }
    if let Some(t) = section {
        for (key, v) in t {
            if matches!(v, Value::Table(_)) {
                return Err(ConfigError::UnknownTable(format!("{subcommand}.{key}")));
            }
            push_entry(&mut out, key, v)?;
        }
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text.parse::<Table>()?)
}

/// Removes `--config PATH` from `args` and splices the manifest's flags in
/// after the subcommand. Arguments are returned unchanged without `--config`
/// or without a recognizable subcommand.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => config = Some(it.next().ok_or(ConfigError::MissingPath)?),
            Some(s) if s.starts_with("--config=") => config = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let Some(pos) = rest
        .iter()
        .position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s)))
    else {
        return Ok(rest);
    };
    let sub = rest[pos].to_str().expect("checked above").to_string();
    let flags = manifest_flags(&load(Path::new(&path))?, &sub)?;
    rest.splice(pos + 1..pos + 1, flags);
    Ok(rest)
}
