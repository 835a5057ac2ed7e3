//! Flat-text dataset files.
//!
//! * features: headerless CSV of reals, one row per example;
//! * labels: one 1-based class index per line;
//! * candidates: one row per example of semicolon-separated 1-based labels,
//!   e.g. `2;5;7`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use plc_core::{Dataset, Matrix};

use crate::error::{Error, Result};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(file))
}

fn parse_error(path: &Path, row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), row, column, message: message.into() }
}

/// Rows and columns are reported 1-based.
pub fn read_features(path: &Path) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader(path)?.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| parse_error(path, r + 1, c + 1, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(path, r + 1, c + 1, format!("non-finite value {field:?}")));
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_error(
                    path,
                    r + 1,
                    row.len().min(first.len()) + 1,
                    format!("{} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty(path.to_path_buf()));
    }
    let (n, d) = (rows.len(), rows[0].len());
    Ok(Matrix::from_vec(n, d, rows.concat()).expect("rows checked to be equally long"))
}

fn parse_label(path: &Path, row: usize, column: usize, field: &str) -> Result<usize> {
    match field.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(parse_error(path, row, column, format!("not a 1-based class index: {field:?}"))),
    }
}

/// Class indices, converted to 0-based.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (r, record) in reader(path)?.records().enumerate() {
        let record = record?;
        if record.len() != 1 {
            return Err(parse_error(path, r + 1, 2, format!("{} fields, expected 1", record.len())));
        }
        labels.push(parse_label(path, r + 1, 1, &record[0])?);
    }
    if labels.is_empty() {
        return Err(Error::Empty(path.to_path_buf()));
    }
    Ok(labels)
}

/// Candidate sets as an `n × q` binary matrix.
pub fn read_candidates(path: &Path, q: usize) -> Result<Matrix> {
    let mut sets = Vec::new();
    for (r, record) in reader(path)?.records().enumerate() {
        let record = record?;
        if record.len() != 1 {
            return Err(parse_error(path, r + 1, 2, "candidate labels are separated by ';', not ','"));
        }
        let mut set = Vec::new();
        for (c, field) in record[0].split(';').enumerate() {
            let label = parse_label(path, r + 1, c + 1, field.trim())?;
            if label >= q {
                return Err(parse_error(path, r + 1, c + 1, format!("label {} exceeds the {q} classes", label + 1)));
            }
            set.push(label);
        }
        sets.push(set);
    }
    if sets.is_empty() {
        return Err(Error::Empty(path.to_path_buf()));
    }
    Ok(plc_core::data::candidates_from_sets(&sets, q)?)
}

/// Features and labels of one dataset. The class count is the largest
/// label. With `standardize` every feature column is z-scored.
pub fn load_dataset(features: &Path, labels: &Path, standardize: bool) -> Result<Dataset> {
    let x = read_features(features)?;
    let truth = read_labels(labels)?;
    if x.rows() != truth.len() {
        return Err(Error::Alignment { features: x.rows(), labels: truth.len() });
    }
    let q = truth.iter().max().map_or(0, |&m| m + 1);
    let dataset = Dataset::new(x, Some(truth), q)?;
    Ok(if standardize { dataset.standardized() } else { dataset })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let mut out = create(path)?;
    for line in lines {
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_features(path: &Path, x: &Matrix) -> Result<()> {
    write_lines(path, x.row_iter().map(|row| row.iter().map(f64::to_string).collect::<Vec<_>>().join(",")))
}

/// Writes 1-based labels.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    write_lines(path, labels.iter().map(|l| (l + 1).to_string()))
}

pub fn write_candidates(path: &Path, y: &Matrix) -> Result<()> {
    write_lines(
        path,
        y.row_iter().map(|row| {
            let set: Vec<String> = row.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(c, _)| (c + 1).to_string()).collect();
            set.join(";")
        }),
    )
}
