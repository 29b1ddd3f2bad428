//! Options come from flags, optionally layered over a JSON file passed with
//! `--config`. Flags win; keys the command does not know are rejected.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Common {
    /// JSON object with any of this command's options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Output format: CSV or JSON lines.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Parses a real number, also accepting fractions such as `1/3`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("not a number: {s}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("not a number: {s}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("not a number: {s}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("not a finite number: {s}"))
    }
}

/// Overlays the flags in `flags` on the JSON file at `path`.
pub fn resolve<T: Serialize + DeserializeOwned>(command: &str, flags: T, path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else { return Ok(flags) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let Value::Object(mut file) = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
    else {
        return Err(CliError::Validation(format!("{}: expected a JSON object", path.display())));
    };
    if let Some(name) = file.remove("command") {
        if name.as_str() != Some(command) {
            return Err(CliError::Validation(format!("config is for command {name}, not {command}")));
        }
    }
    let Value::Object(flag_map) = serde_json::to_value(&flags)? else {
        unreachable!("option structs serialize to objects")
    };
    if let Some(key) = file.keys().find(|k| !flag_map.contains_key(*k)) {
        return Err(CliError::Validation(format!("unknown key {key:?} in config for {command}")));
    }
    let mut merged: Map<String, Value> = file;
    for (k, v) in flag_map {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Validation(format!("config: {e}")))
}

pub fn require<T: Clone>(value: &Option<T>, flag: &str) -> CliResult<T> {
    value.clone().ok_or_else(|| CliError::missing(flag))
}
