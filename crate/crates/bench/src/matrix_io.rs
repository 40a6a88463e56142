//! CSV input of per-step linearizations and output of dense matrices.

use std::path::Path;

use drmhe::ltv_model::LtvSystem;
use nalgebra::DMatrix;

use crate::error::{BenchError, Result};

/// Reads an LTV model with one row per transition and columns
/// `a{i}{j}` (1-based, `n×n`) and `c{i}{j}` (`p×n`).
pub fn read_linearization(path: &Path) -> Result<LtvSystem> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let invalid = |message: String| BenchError::Invalid(format!("{}: {message}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let a_count = header.iter().filter(|h| h.starts_with('a')).count();
    let c_count = header.iter().filter(|h| h.starts_with('c')).count();
    let n = (a_count as f64).sqrt().round() as usize;
    if n == 0 || n * n != a_count || c_count == 0 || c_count % n != 0 {
        return Err(invalid(format!(
            "expected n² a-columns and p·n c-columns, found {a_count} and {c_count}"
        )));
    }
    let p = c_count / n;
    let position = |name: String| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| invalid(format!("missing column {name}")))
    };
    let a_cols = (0..n * n)
        .map(|k| position(format!("a{}{}", k / n + 1, k % n + 1)))
        .collect::<Result<Vec<_>>>()?;
    let c_cols = (0..p * n)
        .map(|k| position(format!("c{}{}", k / n + 1, k % n + 1)))
        .collect::<Result<Vec<_>>>()?;

    let (mut a_seq, mut c_seq) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let value = |col: usize| -> Result<f64> {
            let field = record.get(col).unwrap_or("").trim();
            field
                .parse()
                .map_err(|_| invalid(format!("row {}: `{field}` is not a number", line + 1)))
        };
        let a = a_cols.iter().map(|&c| value(c)).collect::<Result<Vec<_>>>()?;
        let c = c_cols.iter().map(|&c| value(c)).collect::<Result<Vec<_>>>()?;
        a_seq.push(DMatrix::from_row_slice(n, n, &a));
        c_seq.push(DMatrix::from_row_slice(p, n, &c));
    }
    Ok(LtvSystem::new(a_seq, c_seq)?)
}

/// Writes a matrix as headerless CSV, one matrix row per line.
pub fn write_matrix(m: &DMatrix<f64>, path: &Path) -> Result<()> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in m.row_iter() {
        writer
            .write_record(row.iter().map(|x| x.to_string()))
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a headerless numeric CSV written by [`write_matrix`].
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        rows.push(
            record
                .iter()
                .map(|f| {
                    f.trim()
                        .parse()
                        .map_err(|_| BenchError::Invalid(format!("{}: `{f}` is not a number", path.display())))
                })
                .collect::<Result<_>>()?,
        );
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        cols,
        rows.into_iter().flatten(),
    ))
}
