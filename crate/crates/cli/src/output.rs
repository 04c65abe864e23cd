//! Output tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};

/// Writes rows with the given column order. Missing values become empty CSV cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Value], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
            w.write_record(header)?;
            for row in rows {
                let record: Vec<String> = header.iter().map(|&col| cell(row.get(col))).collect();
                w.write_record(&record)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(rows)?;
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub subcommand: &'static str,
    pub config: RunConfig,
    pub master_seed: u64,
    /// Per-batch seeds derived from the master seed; empty when nothing was sampled.
    pub batch_seeds: Vec<u64>,
    pub workers: usize,
    pub wall_time_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
