//! Plain-text matrix dumps shared by the exporters.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matlib::Mat;

/// Decimal text with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV row per matrix row, no header.
pub fn matrix_to_csv(m: &Mat) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<Mat> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (ln, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::Parse {
            path: "matrix csv".into(),
            reason: format!("row {ln}: {e}"),
        })?;
        match cols {
            None => cols = Some(vals.len()),
            Some(c) if c != vals.len() => {
                return Err(Error::Parse {
                    path: "matrix csv".into(),
                    reason: format!("row {ln}: expected {c} values, got {}", vals.len()),
                })
            }
            _ => {}
        }
        data.extend(vals);
        rows += 1;
    }
    Ok(Mat::from_row_slice(rows, cols.unwrap_or(0), &data))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
