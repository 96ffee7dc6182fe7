//! Numeric CSV ingestion: comma delimiter, '.' decimal separator, optional
//! header detected by a non-numeric first line.

use std::fs;
use std::path::Path;

use crate::data::{LabeledDataset, Labels};
use crate::error::{Error, Result};

fn parse_line(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|cell| {
            cell.trim().parse::<f64>().map_err(|_| {
                Error::Parse(format!("line {lineno}: non-numeric cell {:?}", cell.trim()))
            })
        })
        .collect()
}

/// Load a rectangular numeric CSV, pulling the label column out as class
/// indices. `label_column` of `None` uses the last column. Labels must be
/// nonnegative integers.
pub fn load_csv_features(path: &Path, label_column: Option<usize>) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    // header: a first line that does not parse as numbers
    if let Some(&(no, first)) = lines.peek() {
        if parse_line(first, no + 1).is_err() {
            lines.next();
        }
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (no, line) in lines {
        let mut cells = parse_line(line, no + 1)?;
        match width {
            None => {
                if cells.len() < 2 {
                    return Err(Error::Parse(format!(
                        "line {}: need at least one feature and one label column",
                        no + 1
                    )));
                }
                width = Some(cells.len());
            }
            Some(w) if w != cells.len() => {
                return Err(Error::Parse(format!(
                    "line {}: ragged row, expected {w} cells, got {}",
                    no + 1,
                    cells.len()
                )));
            }
            _ => {}
        }
        let w = width.unwrap();
        let col = label_column.unwrap_or(w - 1);
        if col >= w {
            return Err(Error::Parse(format!(
                "label column {col} out of range for {w} columns"
            )));
        }
        let label = cells.remove(col);
        if label < 0.0 || label.fract() != 0.0 {
            return Err(Error::Parse(format!(
                "line {}: label {label} is not a nonnegative integer",
                no + 1
            )));
        }
        labels.push(label as u32);
        rows.push(cells);
    }

    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = labels.iter().max().copied().unwrap_or(0) as usize + 1;
    LabeledDataset::from_rows(
        rows,
        Labels::Multiclass {
            classes,
            values: labels,
        },
    )
}

/// Collapse multiclass labels to ±1: classes in `positive` map to +1, the
/// rest to −1. The positive set must be a proper nonempty subset of the
/// observed classes.
pub fn binarize(
    dataset: &LabeledDataset,
    positive: &std::collections::BTreeSet<usize>,
) -> Result<LabeledDataset> {
    if positive.is_empty() {
        return Err(Error::InvalidParameter("empty positive class set".into()));
    }
    let mut labels = Vec::with_capacity(dataset.len());
    let mut saw_negative = false;
    for i in 0..dataset.len() {
        let class = dataset.class_label(i)?;
        if positive.contains(&class) {
            labels.push(1i8);
        } else {
            labels.push(-1i8);
            saw_negative = true;
        }
    }
    if !saw_negative {
        return Err(Error::InvalidParameter(
            "positive class set covers every observed class".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = dataset.rows().map(<[f64]>::to_vec).collect();
    LabeledDataset::from_rows(rows, Labels::Binary(labels))
}
