use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn resource(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Resource(format!("cannot write {}: {e}", path.display()))
}

pub fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| resource(path, e))?;
    w.write_record(header).map_err(|e| resource(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| resource(path, e))?;
    }
    w.flush().map_err(|e| resource(path, e))
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summaries serialise");
    s.push('\n');
    s
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    fs::write(path, to_json(value)).map_err(|e| resource(path, e))
}
