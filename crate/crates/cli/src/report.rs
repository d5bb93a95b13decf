//! Result artifacts: `result.json` (schema 1) and plot-ready CSV files with
//! header rows. All CSV numbers are decimal with 17 significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::experiments::ExperimentData;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything one run produced, as serialized to `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema: u32,
    pub library_version: String,
    /// Echo of the fully resolved configuration.
    pub config: RunConfig,
    /// Not reproducible between runs; everything else is.
    pub wall_time_ms: f64,
    pub verdicts: BTreeMap<String, String>,
    pub data: ExperimentData,
}

/// `{:.16e}`: 17 significant decimal digits, enough to round-trip f64.
pub fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json(result: &ExperimentResult, path: &Path) -> Result<()> {
    let body = serde_json::to_string_pretty(result).context("serializing result to JSON")?;
    fs::write(path, body.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_result(path: &Path) -> Result<ExperimentResult> {
    let body = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&body).with_context(|| format!("parsing {}", path.display()))
}

/// Quotes a CSV field when it contains a separator, quote or newline.
fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// Writes a CSV with one documented header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    let mut file =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(out.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Creates the output directory and returns absolute-ish artifact paths.
pub fn prepare_out_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir.to_path_buf())
}
