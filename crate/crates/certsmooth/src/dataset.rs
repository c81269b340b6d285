//! JSON Lines datasets: one `{"x": [...], "label": k}` object per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use certsmooth_core::calibration::LabeledDataset;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    x: Vec<f64>,
    label: usize,
}

/// Blank lines are skipped; every other line must hold one example of the
/// same dimension as the first.
pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(line).map_err(|e| Error::parse(path, Some(line_no), e))?;
        if let Some(first) = points.first().map(Vec::len) {
            if row.x.len() != first {
                return Err(Error::parse(
                    path,
                    Some(line_no),
                    format!("expected {first} coordinates, found {}", row.x.len()),
                ));
            }
        }
        if row.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(path, Some(line_no), "non-finite coordinate"));
        }
        points.push(row.x);
        labels.push(row.label);
    }
    if points.is_empty() {
        return Err(Error::parse(path, None, "dataset is empty"));
    }
    LabeledDataset::new(points, labels).map_err(|e| Error::parse(path, None, e))
}

pub fn write_dataset(path: &Path, data: &LabeledDataset) -> Result<()> {
    let mut out = Vec::new();
    for (x, label) in data.iter() {
        serde_json::to_writer(&mut out, &Row { x: x.to_vec(), label }).expect("rows serialize");
        out.push(b'\n');
    }
    fs::File::create(path).and_then(|mut f| f.write_all(&out)).map_err(|e| Error::io(path, e))
}
