//! JSON config loading with dotted-path overrides.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Reads the config file (or starts from `{}`) and applies `key=value` overrides in order.
pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Value> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    if !root.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    for spec in overrides {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
        set_path(&mut root, key.trim(), parse_value(raw))?;
    }
    Ok(root)
}

/// JSON literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

pub fn set_path(root: &mut Value, key: &str, value: Value) -> CliResult<()> {
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("malformed override key `{key}`")));
    }
    let mut cur = root;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let obj = match cur {
            Value::Object(m) => m,
            _ => return Err(CliError::Config(format!("override `{key}`: `{part}` is below a non-object value"))),
        };
        if parts.peek().is_none() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("key has at least one segment")
}

pub fn typed<T: DeserializeOwned>(value: Value) -> CliResult<T> {
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("invalid config: {e}")))
}

/// Removes a top-level section so the remainder can be parsed strictly.
pub fn take_section(root: &mut Value, name: &str) -> Option<Value> {
    root.as_object_mut().and_then(|m| m.remove(name))
}
