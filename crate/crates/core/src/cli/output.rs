//! Atomic JSON and CSV emission.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{HoroError, Result};

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A CSV table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header).map_err(io_error)?;
        for row in &self.rows {
            writer.write_record(row).map_err(io_error)?;
        }
        writer.into_inner().map_err(|e| HoroError::Io(e.to_string()))
    }
}

fn io_error(e: impl std::fmt::Display) -> HoroError {
    HoroError::Io(e.to_string())
}

/// Formats an optional number, leaving the cell empty for `None`.
pub fn cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// What every JSON summary carries besides the command's own result.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    pub config_sha256: &'a str,
    pub seed: u64,
    pub space: &'a super::config::SpaceSpec,
    pub violations: &'a [String],
    pub result: T,
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_error)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_error)?;
    tmp.write_all(bytes).map_err(io_error)?;
    tmp.as_file().sync_all().map_err(io_error)?;
    tmp.persist(path).map_err(|e| io_error(e.error))?;
    Ok(())
}

/// The JSON summary and CSV table exactly as they are written to disk.
pub fn render<T: Serialize>(envelope: &Envelope<'_, T>, table: &Table) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut json = serde_json::to_vec_pretty(&serde_json::to_value(envelope).map_err(io_error)?).map_err(io_error)?;
    json.push(b'\n');
    Ok((json, table.to_bytes()?))
}
