//! Headerless CSV matrices and JSON encoding of coefficients.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use serde_json::{json, Value};

/// Reads a headerless CSV of decimal numbers, one observation per row.
pub fn read_real(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {} is not numeric", path.display(), i + 1))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                bail!("{}: row {} has {} fields, expected {}", path.display(), i + 1, row.len(), first.len());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        bail!("{} is empty", path.display());
    }
    let (n, p) = (rows.len(), rows[0].len());
    Ok(Array2::from_shape_vec((n, p), rows.into_iter().flatten().collect())?)
}

/// Complex matrix stored as alternating real and imaginary columns.
pub fn read_complex(path: &Path) -> Result<Array2<Complex64>> {
    let raw = read_real(path)?;
    if raw.ncols() % 2 != 0 {
        bail!("{}: complex input needs an even number of columns", path.display());
    }
    let (n, p) = (raw.nrows(), raw.ncols() / 2);
    Ok(Array2::from_shape_fn((n, p), |(i, j)| Complex64::new(raw[[i, 2 * j]], raw[[i, 2 * j + 1]])))
}

/// Scalars that can be written to JSON: reals as numbers, complex values
/// as `[re, im]`.
pub trait JsonScalar {
    fn to_json(&self) -> Value;
}

impl JsonScalar for f64 {
    fn to_json(&self) -> Value {
        json!(self)
    }
}

impl JsonScalar for Complex64 {
    fn to_json(&self) -> Value {
        json!([self.re, self.im])
    }
}

pub fn matrix_json<T: JsonScalar>(a: ArrayView2<T>) -> Value {
    Value::Array(a.rows().into_iter().map(|r| Value::Array(r.iter().map(|v| v.to_json()).collect())).collect())
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

pub fn write_json(path: Option<&Path>, value: &Value) -> Result<()> {
    let mut out = open_output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
