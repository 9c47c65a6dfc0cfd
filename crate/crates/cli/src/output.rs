//! CSV tables with round-trip float formatting, and sidecar files.

use std::path::{Path, PathBuf};

use csv::{Terminator, WriterBuilder};
use serde::Serialize;

use crate::error::CliError;

/// Seventeen significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-separated, LF-terminated bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = WriterBuilder::new()
            .terminator(Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.to_bytes()?)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// `<out><suffix>`, e.g. `run.csv` → `run.csv.config.json`.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes the resolved configuration next to `out`.
pub fn write_resolved<T: Serialize>(out: &Path, config: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(config).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_file(&sidecar(out, ".config.json"), text.as_bytes())
}
