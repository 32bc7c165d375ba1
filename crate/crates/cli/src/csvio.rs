use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rvsmanopt::Mat;
use serde::Serialize;

use crate::CliError;

/// Parse comma-separated numeric rows into a matrix.
///
/// Line numbers in errors are 1-based and count the header line.
pub fn parse_matrix_csv<R: Read>(reader: R, has_header: bool) -> Result<Mat, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(format!("line {line}: expected {w} values, found {}", record.len()));
            }
            Some(_) => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let x: f64 = cell
                .parse()
                .map_err(|_| format!("line {line}, column {}: cannot parse {cell:?} as a number", col + 1))?;
            values.push(x);
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err("no data rows".into());
    }
    Ok(Mat::from_row_slice(rows, cols, &values))
}

pub fn read_matrix_csv(path: &Path, has_header: bool) -> Result<Mat, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_matrix_csv(file, has_header).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x:e}")).collect();
        w.write_record(&row).map_err(|e| CliError::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))
}

pub fn write_rows_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
