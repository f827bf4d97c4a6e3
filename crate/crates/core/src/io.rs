//! Numeric array ingestion from CSV and JSON.
//!
//! CSV: one value per cell, rows are lines, no header. A 1D array may be
//! written as one value per line or as a single row. JSON: a flat array of
//! numbers (1D) or an array of equal-length arrays (2D, row-major).

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::encoding::RawArray;
use crate::error::{Error, Result};

/// Parsed rows of a numeric file, before any shape interpretation.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn flatten(self) -> Vec<f64> {
        self.rows.into_iter().flatten().collect()
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let is_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let table = if is_json {
        parse_json(&text)
    } else {
        parse_csv(&text)
    }
    .map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })?;
    if table.rows.iter().all(|r| r.is_empty()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: "file contains no values".into(),
        });
    }
    Ok(table)
}

fn parse_csv(text: &str) -> std::result::Result<Table, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let row = record
            .iter()
            .filter(|cell| !cell.is_empty())
            .enumerate()
            .map(|(col, cell)| parse_number(cell, line + 1, col + 1))
            .collect::<std::result::Result<Vec<f64>, String>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    Ok(Table { rows })
}

fn parse_number(cell: &str, line: usize, col: usize) -> std::result::Result<f64, String> {
    let v: f64 = cell
        .parse()
        .map_err(|_| format!("line {line}, column {col}: `{cell}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("line {line}, column {col}: non-finite value `{cell}`"));
    }
    Ok(v)
}

fn parse_json(text: &str) -> std::result::Result<Table, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let items = value
        .as_array()
        .ok_or_else(|| "top-level JSON value must be an array".to_string())?;
    let number = |v: &Value, at: String| -> std::result::Result<f64, String> {
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("{at}: expected a finite number, got {v}"))
    };
    if items.iter().all(Value::is_number) {
        let row = items
            .iter()
            .enumerate()
            .map(|(i, v)| number(v, format!("element {i}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        return Ok(Table { rows: vec![row] });
    }
    let rows = items
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let cells = row
                .as_array()
                .ok_or_else(|| format!("row {r}: expected an array of numbers"))?;
            cells
                .iter()
                .enumerate()
                .map(|(c, v)| number(v, format!("row {r}, column {c}")))
                .collect()
        })
        .collect::<std::result::Result<Vec<Vec<f64>>, String>>()?;
    Ok(Table { rows })
}

/// Loads a 1D array; every cell of the file is taken in row-major order.
pub fn load_raw_1d(path: &Path) -> Result<RawArray> {
    let values = read_table(path)?.flatten();
    RawArray::new(values).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads a square 2D array (`N` rows of `N` values).
pub fn load_raw_2d(path: &Path) -> Result<RawArray> {
    let table = read_table(path)?;
    let side = table.rows.len();
    if let Some((r, row)) = table.rows.iter().enumerate().find(|(_, row)| row.len() != side) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!(
                "expected a square array: {side} rows but row {r} has {} values",
                row.len()
            ),
        });
    }
    RawArray::new_2d(side, table.flatten()).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
