use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::trajectory::Sample;

/// Floats are written with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes `time,value,term:<name>...,aux:<name>...`, keeping every
/// `row_stride`-th sample and always the last one.
pub fn write_series(path: &Path, samples: &[Sample], row_stride: usize) -> Result<()> {
    let mut header = vec!["time".to_string(), "value".to_string()];
    if let Some(first) = samples.first() {
        header.extend(first.terms.keys().map(|k| format!("term:{k}")));
        header.extend(first.aux.keys().map(|k| format!("aux:{k}")));
    }
    let stride = row_stride.max(1);
    let rows = samples
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i + 1 == samples.len())
        .map(|(_, s)| {
            let mut row = vec![format_float(s.time), format_float(s.value)];
            row.extend(s.terms.values().map(|v| format_float(*v)));
            row.extend(s.aux.values().map(|v| format_float(*v)));
            row
        });
    write_rows(path, &header, rows)
}

/// Writes named columns of equal length.
pub fn write_table(path: &Path, columns: &[(&str, &[f64])]) -> Result<()> {
    let header: Vec<String> = columns.iter().map(|(n, _)| n.to_string()).collect();
    let len = columns.first().map_or(0, |(_, c)| c.len());
    let rows = (0..len).map(|i| columns.iter().map(|(_, c)| format_float(c[i])).collect());
    write_rows(path, &header, rows)
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
