//! CSV files for matrices and vectors: one row per line, no header, `.` decimal.

use std::io::{Read, Write};
use std::path::Path;

use super::{DenseMatrix, DenseVector, LinalgError};

/// Formats a float with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_matrix<R: Read>(reader: R) -> Result<DenseMatrix, LinalgError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| LinalgError::Csv(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| LinalgError::Parse {
                    row: i,
                    col: j,
                    token: field.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LinalgError::Empty);
    }
    DenseMatrix::from_rows(&rows)
}

/// Reads a vector stored either as one column or as a single row.
pub fn read_vector<R: Read>(reader: R) -> Result<DenseVector, LinalgError> {
    let m = read_matrix(reader)?;
    match m.shape() {
        (_, 1) => Ok(m.column(0)),
        (1, _) => DenseVector::new(m.row(0).to_vec()),
        (rows, cols) => Err(LinalgError::NotAVector { rows, cols }),
    }
}

pub fn write_matrix<W: Write>(m: &DenseMatrix, mut writer: W) -> std::io::Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format_f64(*v)).collect();
        writeln!(writer, "{}", line.join(","))?;
    }
    writer.flush()
}

/// Writes a vector as a single column.
pub fn write_vector<W: Write>(v: &DenseVector, mut writer: W) -> std::io::Result<()> {
    for x in v.iter() {
        writeln!(writer, "{}", format_f64(*x))?;
    }
    writer.flush()
}

pub fn load_matrix(path: &Path) -> Result<DenseMatrix, LinalgError> {
    let file = std::fs::File::open(path)
        .map_err(|e| LinalgError::Io(format!("{}: {e}", path.display())))?;
    read_matrix(file)
}

pub fn load_vector(path: &Path) -> Result<DenseVector, LinalgError> {
    let file = std::fs::File::open(path)
        .map_err(|e| LinalgError::Io(format!("{}: {e}", path.display())))?;
    read_vector(file)
}
