use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::error::CliResult;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn sig12_vec(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(sig12).collect()
}

pub fn opt12(x: Option<f64>) -> Option<f64> {
    x.map(sig12)
}

/// Renders rows as CSV with a header, or as one JSON object per line.
pub fn render<R: Serialize>(rows: &[R], format: Format) -> CliResult<String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row)?;
            }
            let bytes = w.into_inner().map_err(|e| crate::error::CliError::Io(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => {
            let mut s = String::new();
            for row in rows {
                s.push_str(&serde_json::to_string(row)?);
                s.push('\n');
            }
            Ok(s)
        }
    }
}

/// Writes finished output; nothing is created unless the command succeeded.
pub fn emit(body: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}
