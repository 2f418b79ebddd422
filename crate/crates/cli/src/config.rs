//! Config loading: a TOML file plus repeatable `--set section.key=value`
//! overrides, decoded into the runner's spec types.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

#[derive(Debug)]
pub enum ConfigError {
    Io { path: String, err: std::io::Error },
    Parse { path: String, err: toml::de::Error },
    Override(String),
    Shape(toml::de::Error),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, err } => write!(f, "cannot read {path}: {err}"),
            ConfigError::Parse { path, err } => write!(f, "cannot parse {path}: {err}"),
            ConfigError::Override(msg) => write!(f, "bad --set override: {msg}"),
            ConfigError::Shape(err) => write!(f, "config does not describe a run: {err}"),
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn load(path: &Path) -> Result<toml::Value, ConfigError> {
    let text = fs::read_to_string(path).map_err(|err| ConfigError::Io {
        path: path.display().to_string(),
        err,
    })?;
    text.parse::<toml::Value>()
        .map_err(|err| ConfigError::Parse {
            path: path.display().to_string(),
            err,
        })
}

/// `raw` is read as a TOML literal when it is one (numbers, booleans,
/// arrays, quoted strings) and as a bare string otherwise, so
/// `--set sim.routing=asp_ft` and `--set code.block_length=2400` both work.
fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub fn apply_overrides(value: &mut toml::Value, sets: &[String]) -> Result<(), ConfigError> {
    for s in sets {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::Override(format!("{s:?} is not KEY=VALUE")))?;
        let segments: Vec<&str> = key.split('.').collect();
        if segments.iter().any(|seg| seg.is_empty()) {
            return Err(ConfigError::Override(format!(
                "empty segment in key {key:?}"
            )));
        }
        let mut cur = &mut *value;
        for seg in &segments[..segments.len() - 1] {
            let table = cur.as_table_mut().ok_or_else(|| {
                ConfigError::Override(format!("{key:?} passes through a non-table value"))
            })?;
            cur = table
                .entry(seg.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        let table = cur.as_table_mut().ok_or_else(|| {
            ConfigError::Override(format!("{key:?} passes through a non-table value"))
        })?;
        table.insert(segments[segments.len() - 1].to_string(), parse_literal(raw));
    }
    Ok(())
}

pub fn decode<T: DeserializeOwned>(value: toml::Value) -> Result<T, ConfigError> {
    value.try_into().map_err(ConfigError::Shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_and_create_keys() {
        let mut v: toml::Value = "[code]\nblock_length = 48\n".parse().unwrap();
        apply_overrides(
            &mut v,
            &[
                "code.block_length=2400".to_string(),
                "sim.routing=asp_ft".to_string(),
                "sim.record_routing_trace=true".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(v["code"]["block_length"].as_integer(), Some(2400));
        assert_eq!(v["sim"]["routing"].as_str(), Some("asp_ft"));
        assert_eq!(v["sim"]["record_routing_trace"].as_bool(), Some(true));
    }

    #[test]
    fn overrides_reject_malformed_keys() {
        let mut v: toml::Value = "x = 1\n".parse().unwrap();
        assert!(apply_overrides(&mut v, &["no_equals".to_string()]).is_err());
        assert!(apply_overrides(&mut v, &["a..b=1".to_string()]).is_err());
        assert!(apply_overrides(&mut v, &["x.y=1".to_string()]).is_err());
    }

    #[test]
    fn literals_fall_back_to_strings() {
        assert_eq!(parse_literal("2400").as_integer(), Some(2400));
        assert_eq!(parse_literal("true").as_bool(), Some(true));
        assert_eq!(parse_literal("asp_ft").as_str(), Some("asp_ft"));
        assert_eq!(parse_literal("\"quoted\"").as_str(), Some("quoted"));
    }
}
