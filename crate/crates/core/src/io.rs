//! Plain-text table helpers shared by the CSV import/export routines.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with nine significant digits so artifacts are stable
/// across runs and platforms.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// Parses a numeric CSV with an exact header line.
pub fn parse_csv(path: &Path, text: &str, header: &str, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == header => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header `{header}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        if row.len() != columns {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("expected {columns} columns, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
