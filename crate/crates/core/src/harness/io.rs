//! Plain-text formats: matrices as headerless row-major CSV, vectors one
//! value per line, index sets as comma-separated 0-based integers.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::model::IndexSet;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_float(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|e| parse_err(path, format!("line {line}: {field:?}: {e}")))?;
    if !v.is_finite() {
        return Err(parse_err(
            path,
            format!("line {line}: non-finite value {field:?}"),
        ));
    }
    Ok(v)
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let row = record
            .iter()
            .map(|f| parse_float(path, i + 1, f))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows).map_err(|e| parse_err(path, e.to_string()))
}

pub fn write_matrix(path: &Path, a: &DenseMatrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..a.rows() {
        let row: Vec<String> = a.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_vector(path: &Path) -> Result<DenseVector> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let values = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_float(path, i + 1, l))
        .collect::<Result<Vec<_>>>()?;
    DenseVector::new(values).map_err(|e| parse_err(path, e.to_string()))
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    for x in v {
        writeln!(file, "{x:.16e}").map_err(io_err(path))?;
    }
    Ok(())
}

pub fn parse_index_set(text: &str) -> Result<IndexSet> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(IndexSet::empty());
    }
    let indices = text
        .split(',')
        .map(|f| {
            f.trim()
                .parse::<usize>()
                .map_err(|e| Error::invalid(format!("index {f:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    IndexSet::new(indices)
}

pub fn read_index_set(path: &Path) -> Result<IndexSet> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_index_set(&text).map_err(|e| parse_err(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let a = DenseMatrix::from_rows(&[vec![0.1, -2.5e-17, 3.0], vec![1.0 / 3.0, 0.0, -7.25]])
            .unwrap();
        write_matrix(&path, &a).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), a);
    }

    #[test]
    fn vector_and_index_formats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        fs::write(&path, "1.5\n-2\n\n3e-3\n").unwrap();
        assert_eq!(read_vector(&path).unwrap().as_slice(), &[1.5, -2.0, 3e-3]);
        assert_eq!(parse_index_set(" 4, 0,2 ").unwrap().as_slice(), &[0, 2, 4]);
        assert!(parse_index_set("1,x").is_err());
    }

    #[test]
    fn ragged_matrix_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "1,2\n3\n").unwrap();
        let err = read_matrix(&path).unwrap_err();
        assert!(err.to_string().contains("bad.csv"), "{err}");
    }
}
