//! CSV loaders for eigenvalues and the matrices of a score statistic.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::CliError;

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_cell(path: &Path, cell: &str, line: usize, column: &str) -> Result<f64, CliError> {
    cell.parse::<f64>().map_err(|_| {
        CliError::Config(format!(
            "{}: line {line}, column '{column}': '{cell}' is not a number",
            path.display()
        ))
    })
}

/// Reads a headered CSV with a `lambda` column and an optional `q` column.
/// The first non-empty `q` cell, if any, is returned as the observed
/// statistic.
pub fn load_eigenvalues_csv(path: &Path) -> Result<(Vec<f64>, Option<f64>), CliError> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    let lambda_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("lambda"))
        .ok_or_else(|| CliError::Config(format!("{}: no 'lambda' column", path.display())))?;
    let q_col = headers.iter().position(|h| h.eq_ignore_ascii_case("q"));
    let mut lambdas = Vec::new();
    let mut q = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec =
            rec.map_err(|e| CliError::Config(format!("{}: line {line}: {e}", path.display())))?;
        let cell = rec.get(lambda_col).unwrap_or("");
        if !cell.is_empty() {
            let v = parse_cell(path, cell, line, "lambda")?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!(
                    "{}: line {line}: eigenvalue {v} must be positive and finite",
                    path.display()
                )));
            }
            lambdas.push(v);
        }
        if let (None, Some(c)) = (q, q_col) {
            let cell = rec.get(c).unwrap_or("");
            if !cell.is_empty() {
                q = Some(parse_cell(path, cell, line, "q")?);
            }
        }
    }
    if lambdas.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no eigenvalues",
            path.display()
        )));
    }
    Ok((lambdas, q))
}

/// Reads a headered numeric CSV into a matrix.
pub fn load_matrix_csv(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    let k = headers.len();
    let mut data = Vec::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec =
            rec.map_err(|e| CliError::Config(format!("{}: line {line}: {e}", path.display())))?;
        if rec.len() != k {
            return Err(CliError::Config(format!(
                "{}: line {line} has {} fields, header has {k}",
                path.display(),
                rec.len()
            )));
        }
        for (j, cell) in rec.iter().enumerate() {
            data.push(parse_cell(path, cell, line, &headers[j])?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Config(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(DMatrix::from_row_slice(n, k, &data))
}

fn load_vector_csv(path: &Path) -> Result<DVector<f64>, CliError> {
    let m = load_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(CliError::Config(format!(
            "{}: expected one column, found {}",
            path.display(),
            m.ncols()
        )));
    }
    Ok(m.column(0).into_owned())
}

/// Features `n x k`, residual `n` and optional weights `k`.
pub type Design = (DMatrix<f64>, DVector<f64>, Option<DVector<f64>>);

/// Inputs of the Gram-matrix statistic.
pub fn load_matrices_csv(
    features: &Path,
    residual: &Path,
    weights: Option<&Path>,
) -> Result<Design, CliError> {
    let z = load_matrix_csv(features)?;
    let r = load_vector_csv(residual)?;
    if r.len() != z.nrows() {
        return Err(CliError::Config(format!(
            "dimension mismatch: {} has {} rows but {} has {}",
            features.display(),
            z.nrows(),
            residual.display(),
            r.len()
        )));
    }
    let w = match weights {
        Some(p) => {
            let w = load_vector_csv(p)?;
            if w.len() != z.ncols() {
                return Err(CliError::Config(format!(
                    "dimension mismatch: {} has {} columns but {} has {} weights",
                    features.display(),
                    z.ncols(),
                    p.display(),
                    w.len()
                )));
            }
            Some(w)
        }
        None => None,
    };
    Ok((z, r, w))
}

/// Parses `"1,2.5,3"`; returns `None` if any piece is not a number.
pub fn parse_inline_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|p| p.trim().parse::<f64>().ok()).collect()
}
