//! Deterministic table writers.
//!
//! Every table carries a comment line with the config hash and artifact
//! version. Floats are printed with 17 significant digits (round-trip exact
//! for doubles), '.' decimal separator and LF line endings, so identical
//! configurations produce byte-identical files.

use crate::CliError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the raw configuration bytes, lowercase hex.
pub fn config_hash(raw: &[u8]) -> String {
    hex::encode(Sha256::digest(raw))
}

/// One table cell.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Str(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Str(v) => v.clone(),
        }
    }
}

/// Fixed scientific formatting: 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Serialize)]
struct JsonTable<'a> {
    config_hash: &'a str,
    version: &'a str,
    columns: &'a [&'a str],
    rows: &'a [Vec<Cell>],
}

/// Write `name.csv` or `name.json` under `dir` depending on `format`.
pub fn write_table(
    dir: &Path,
    name: &str,
    format: crate::config::OutputFormat,
    hash: &str,
    columns: &[&str],
    rows: &[Vec<Cell>],
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!(
        "{name}.{}",
        match format {
            crate::config::OutputFormat::Csv => "csv",
            crate::config::OutputFormat::Json => "json",
        }
    ));
    let mut out = BufWriter::new(File::create(&path)?);
    match format {
        crate::config::OutputFormat::Csv => {
            writeln!(out, "# config_hash={hash} version={ARTIFACT_VERSION}")?;
            writeln!(out, "{}", columns.join(","))?;
            for row in rows {
                debug_assert_eq!(row.len(), columns.len());
                let line: Vec<String> = row.iter().map(Cell::csv).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
        crate::config::OutputFormat::Json => {
            let table = JsonTable {
                config_hash: hash,
                version: ARTIFACT_VERSION,
                columns,
                rows,
            };
            serde_json::to_writer_pretty(&mut out, &table)
                .map_err(|e| CliError::Config(e.to_string()))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(path)
}

/// Write a JSON document (summaries, verify reports).
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{name}.json"));
    let mut out = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Config(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(path)
}
