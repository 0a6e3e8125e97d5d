//! File formats: header-less integer confusion CSV, line-delimited JSON and
//! tidy sweep CSV. Files are written atomically.

use crate::error::{Error, Result};
use crate::estimators::ConfusionMatrix;
use crate::experiment::{SweepResultRow, SWEEP_CSV_HEADER};
use serde::Serialize;
use std::fs;
use std::path::Path;

/// Parses `k` lines of `k` comma-separated nonnegative integers with equal
/// row sums. Blank lines are skipped. Locations in errors are 1-based; a
/// column of 0 refers to the whole row.
pub fn parse_confusion_csv(text: &str) -> Result<ConfusionMatrix> {
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut line_of_row = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let row_no = line_no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (c, field) in line.split(',').enumerate() {
            let field = field.trim();
            let value = field.parse::<u64>().map_err(|_| Error::Parse {
                row: row_no,
                col: c + 1,
                msg: if field.starts_with('-') {
                    format!("negative count '{field}'")
                } else {
                    format!("'{field}' is not a nonnegative integer")
                },
            })?;
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    row: row_no,
                    col: row.len().min(first.len()) + 1,
                    msg: format!("row has {} columns, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
        line_of_row.push(row_no);
    }
    let Some(first) = rows.first() else {
        return Err(Error::Parse {
            row: 1,
            col: 0,
            msg: "empty confusion matrix".into(),
        });
    };
    let k = first.len();
    if rows.len() != k {
        return Err(Error::Parse {
            row: line_of_row[rows.len().min(k) - 1],
            col: 0,
            msg: format!(
                "matrix has {} rows and {k} columns; it must be square",
                rows.len()
            ),
        });
    }
    if k < 2 {
        return Err(Error::Parse {
            row: line_of_row[0],
            col: 0,
            msg: "need k >= 2 classes".into(),
        });
    }
    let r: u64 = first.iter().sum();
    for (row, line) in rows.iter().zip(&line_of_row) {
        let sum: u64 = row.iter().sum();
        if sum != r {
            return Err(Error::Parse {
                row: *line,
                col: 0,
                msg: format!("row sums to {sum}, expected {r} like row 1"),
            });
        }
    }
    if r == 0 {
        return Err(Error::Parse {
            row: line_of_row[0],
            col: 0,
            msg: "rows sum to 0".into(),
        });
    }
    ConfusionMatrix::new(rows)
}

pub fn read_confusion_csv(path: &Path) -> Result<ConfusionMatrix> {
    parse_confusion_csv(&fs::read_to_string(path)?)
}

pub fn confusion_to_csv(m: &ConfusionMatrix) -> String {
    let mut out = String::new();
    for row in m.counts() {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One compact JSON document per line.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn sweep_to_csv(rows: &[SweepResultRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.s, r.true_mi, r.true_mi_se, r.method, r.replicate, r.estimate, r.seed
        ));
    }
    out
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("'{}' is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}
