//! Run configuration: a TOML file plus `--set key=value` overrides.

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;
use sha2::{Digest, Sha256};
use std::path::Path;

/// The resolved parameter tree of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    table: toml::Table,
}

/// Raised for malformed configs; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                text.parse::<toml::Table>().map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        Ok(Self { table })
    }

    /// Deserializes the tree, minus the global `seed`, into a command's typed config.
    pub fn parse<T: DeserializeOwned>(&self) -> anyhow::Result<T> {
        let mut table = self.table.clone();
        table.remove("seed");
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError(e.to_string()).into())
    }

    /// Canonical JSON rendering (keys sorted), used for hashing and provenance.
    pub fn canonical_json(&self) -> String {
        let value: serde_json::Value =
            serde_json::to_value(&self.table).expect("TOML tables always convert to JSON");
        serde_json::to_string(&sort_keys(value)).expect("JSON values serialize")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// The global seed (`seed`, default 0).
    pub fn seed(&self) -> anyhow::Result<u64> {
        match self.table.get("seed") {
            None => Ok(0),
            Some(toml::Value::Integer(s)) if *s >= 0 => Ok(*s as u64),
            Some(other) => bail!(ConfigError(format!("seed must be a nonnegative integer, got {other}"))),
        }
    }
}

fn sort_keys(value: serde_json::Value) -> serde_json::Value {
    match value {
        serde_json::Value::Object(map) => {
            let mut entries: Vec<_> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            serde_json::Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        serde_json::Value::Array(items) => serde_json::Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Applies `a.b.c=value`; the value is read as a TOML literal, or as a bare
/// string when it does not parse.
fn apply_override(table: &mut toml::Table, item: &str) -> anyhow::Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override `{item}` is not of the form key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key is present"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!(ConfigError(format!("override key `{key}` is malformed")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match entry {
            toml::Value::Table(t) => t,
            _ => bail!(ConfigError(format!("override `{key}`: `{part}` is not a table"))),
        };
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
