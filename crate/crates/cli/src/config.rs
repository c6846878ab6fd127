//! Flat `key = value` run configuration merged under command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::Failure;

/// Keys shared by every command; everything else belongs to the command schema.
pub const GLOBAL_KEYS: [&str; 2] = ["out", "format"];

/// Parses a config file. Blank lines and `#` comments are skipped; keys may
/// use the flag spelling (`inner-support`) or the snake form (`inner_support`).
pub fn load(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('-', "_");
        if key.is_empty() {
            return Err(Failure::Usage(format!("config line {}: empty key", i + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Failure::Usage(format!("config line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(map)
}

/// Numbers and booleans are typed; anything else stays a string.
fn typed(value: &str) -> Value {
    match serde_json::from_str::<Value>(value) {
        Ok(v @ (Value::Number(_) | Value::Bool(_))) => v,
        _ => Value::String(value.to_string()),
    }
}

/// Overlays the flags given on the command line onto the file values and
/// re-validates against the command schema, so unknown keys are rejected.
pub fn merge<T: Serialize + DeserializeOwned>(cli: &T, file: &BTreeMap<String, String>) -> Result<T, Failure> {
    let mut map: Map<String, Value> =
        file.iter().filter(|(k, _)| !GLOBAL_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), typed(v))).collect();
    let Value::Object(given) = serde_json::to_value(cli).map_err(|e| Failure::Usage(e.to_string()))? else {
        unreachable!("argument structs serialize to objects");
    };
    map.extend(given.into_iter().filter(|(_, v)| !v.is_null()));
    serde_json::from_value(Value::Object(map)).map_err(|e| Failure::Usage(format!("config: {e}")))
}
