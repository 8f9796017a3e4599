//! Structured-text ingestion and export helpers.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Replaces non-finite numbers, which JSON cannot carry, by strings.
pub fn finite_json(v: Value) -> Value {
    match v {
        Value::Array(a) => Value::Array(a.into_iter().map(finite_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, finite_json(v))).collect()),
        Value::Null => Value::String("nan".into()),
        other => other,
    }
}

/// Parses a JSON document into `T`.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json_str(&std::fs::read_to_string(path)?)
}

/// Pretty JSON; floats keep full round-trip precision.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}
