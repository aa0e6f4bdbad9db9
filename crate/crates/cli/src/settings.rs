//! Effective configuration: config file, then flags, then the seed
//! fallback chain. The printed header is itself a valid `--config` file.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::CliError;

pub const SEED_ENV: &str = "VERITY_SEED";

/// Reads a flat TOML config file, or an empty table when none is given.
pub fn load_table(path: Option<&Path>) -> Result<Table, CliError> {
    let Some(path) = path else {
        return Ok(Table::new());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::runtime("Io", format!("{}: {e}", path.display())))?;
    text.parse::<Table>()
        .map_err(|e| CliError::runtime("ConfigError", format!("{}: {e}", path.display())))
}

/// Flag values that were actually given, keyed like the config file.
#[derive(Default)]
pub struct Overrides(Table);

impl Overrides {
    pub fn set<T: Serialize>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            let v = Value::try_from(v).expect("flag values serialize to TOML");
            self.0.insert(key.to_string(), v);
        }
        self
    }

    pub fn table(&self) -> &Table {
        &self.0
    }

    pub fn flag(&mut self, key: &str, on: bool) -> &mut Self {
        self.set(key, on.then_some(true))
    }
}

/// Merges `overrides` over the file table and resolves the seed: the
/// `--seed` flag, then the file's `seed`, then `VERITY_SEED`, then 0.
pub fn merge(file: Table, overrides: Overrides, seed: Option<u64>) -> Result<Table, CliError> {
    let mut table = file;
    table.extend(overrides.0);
    match seed {
        Some(s) => {
            table.insert("seed".into(), seed_value(s)?);
        }
        None if !table.contains_key("seed") => {
            let s = match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| CliError::usage(format!("{SEED_ENV}={v:?} is not a seed: {e}")))?,
                Err(_) => 0,
            };
            table.insert("seed".into(), seed_value(s)?);
        }
        None => {}
    }
    Ok(table)
}

fn seed_value(s: u64) -> Result<Value, CliError> {
    i64::try_from(s)
        .map(Value::Integer)
        .map_err(|_| CliError::usage(format!("seed {s} does not fit a TOML integer")))
}

/// Deserializes resolved settings; missing or unknown keys are usage errors.
pub fn resolve<T: DeserializeOwned>(table: Table) -> Result<T, CliError> {
    T::deserialize(table).map_err(|e| CliError::usage(format!("configuration: {}", e.message())))
}

/// Removes `keys` from `table` into a separate table.
pub fn split_off(table: &mut Table, keys: &[&str]) -> Table {
    keys.iter()
        .filter_map(|k| table.remove(*k).map(|v| (k.to_string(), v)))
        .collect()
}

pub fn header(command: &str, body: &str) -> String {
    let mut out = format!("# verity {command}: effective configuration\n");
    out.push_str(body);
    if !body.ends_with('\n') {
        out.push('\n');
    }
    out.push_str("# ---\n");
    out
}

pub fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("settings serialize to TOML")
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Stem of a path, for naming artifacts after their inputs.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display(path))
}

