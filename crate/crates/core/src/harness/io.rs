//! CSV matrix files, TOML configs and result documents.
//!
//! Values are written with Rust's shortest round-trip `f64` formatting, so
//! `load(save(A))` reproduces `A` bit for bit.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{MatrixHandle, Storage};

use super::experiment::{ExperimentConfig, ResultsDocument};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    /// One row per line, comma separated.
    DenseCsv,
    /// Header `i,j,value`, then one zero-based triplet per line.
    SparseCsv,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn reader<R: Read>(input: R, headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_f64(field: &str, line: u64) -> Result<f64> {
    field.parse().map_err(|_| parse_err(line, format!("not a number: {field:?}")))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(line, e.to_string())
}

pub fn read_dense_csv<R: Read>(input: R) -> Result<MatrixHandle> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader(input, false).records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let row = record.iter().map(|f| parse_f64(f, line)).collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(line, format!("expected {} values, found {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "empty file"));
    }
    let (n, d) = (rows.len(), rows[0].len());
    Ok(MatrixHandle::dense(DMatrix::from_fn(n, d, |i, j| rows[i][j])))
}

pub fn write_dense_csv<W: Write>(m: &MatrixHandle, out: W) -> Result<()> {
    let dense = m.to_dense();
    let mut w = BufWriter::new(out);
    for i in 0..dense.nrows() {
        let line: Vec<String> = dense.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads triplets; without `dims` the shape is inferred from the largest
/// indices.
pub fn read_sparse_csv<R: Read>(input: R, dims: Option<(usize, usize)>) -> Result<MatrixHandle> {
    let mut rdr = reader(input, true);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(parse_err(1, "empty file"));
    }
    if header.iter().collect::<Vec<_>>() != ["i", "j", "value"] {
        return Err(parse_err(1, format!("expected header i,j,value, found {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut triplets = Vec::new();
    let mut seen = HashSet::new();
    let (mut max_i, mut max_j) = (0, 0);
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", record.len())));
        }
        let index = |k: usize| -> Result<usize> {
            record[k].parse().map_err(|_| parse_err(line, format!("bad index {:?}", &record[k])))
        };
        let (i, j, v) = (index(0)?, index(1)?, parse_f64(&record[2], line)?);
        if !v.is_finite() {
            return Err(parse_err(line, "non-finite value"));
        }
        if let Some((n, d)) = dims {
            if i >= n || j >= d {
                return Err(parse_err(line, format!("entry ({i}, {j}) outside a {n}x{d} matrix")));
            }
        }
        if !seen.insert((i, j)) {
            return Err(parse_err(line, format!("duplicate entry ({i}, {j})")));
        }
        max_i = max_i.max(i);
        max_j = max_j.max(j);
        triplets.push((i, j, v));
    }
    let (n, d) = match dims {
        Some(dims) => dims,
        None if triplets.is_empty() => {
            return Err(parse_err(1, "no entries and no explicit dimensions"));
        }
        None => (max_i + 1, max_j + 1),
    };
    MatrixHandle::sparse(n, d, triplets)
}

/// Writes stored triplets (dense matrices: their nonzeros).
pub fn write_sparse_csv<W: Write>(m: &MatrixHandle, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "i,j,value")?;
    match m.storage() {
        Storage::Sparse(t) => {
            for &(i, j, v) in t {
                writeln!(w, "{i},{j},{v}")?;
            }
        }
        Storage::Dense(_) => {
            let mut err = Ok(());
            m.for_each_nonzero(|i, j, v| {
                if err.is_ok() {
                    err = writeln!(w, "{i},{j},{v}");
                }
            });
            err?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path, format: MatrixFormat, dims: Option<(usize, usize)>) -> Result<MatrixHandle> {
    let file = BufReader::new(File::open(path)?);
    match format {
        MatrixFormat::DenseCsv => read_dense_csv(file),
        MatrixFormat::SparseCsv => read_sparse_csv(file, dims),
    }
}

pub fn save_matrix(path: &Path, m: &MatrixHandle, format: MatrixFormat) -> Result<()> {
    let file = File::create(path)?;
    match format {
        MatrixFormat::DenseCsv => write_dense_csv(m, file),
        MatrixFormat::SparseCsv => write_sparse_csv(m, file),
    }
}

/// A vector stored as a single-column dense CSV.
pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    let m = load_matrix(path, MatrixFormat::DenseCsv, None)?;
    if m.cols() != 1 {
        return Err(Error::DimensionMismatch(format!("expected one column, found {}", m.cols())));
    }
    Ok(m.to_dense().as_slice().to_vec())
}

pub fn save_vector(path: &Path, v: &[f64]) -> Result<()> {
    save_matrix(path, &MatrixHandle::column(v), MatrixFormat::DenseCsv)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| text[..s.start.min(text.len())].lines().count().max(1) as u64);
        parse_err(line, e.message().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn write_results_json<W: Write>(doc: &ResultsDocument, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// One line per trial row: `method,trial,scale,delta,value,error`.
pub fn write_rows_csv<W: Write>(doc: &ResultsDocument, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "trial", "scale", "delta", "value", "error"]).map_err(csv_err)?;
    for r in &doc.rows {
        w.write_record([
            r.method.clone(),
            r.trial.to_string(),
            opt(r.scale),
            opt(r.delta),
            opt(r.value),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One line per group: `method,scale,delta,count,mean,median,max`.
pub fn write_summary_csv<W: Write>(doc: &ResultsDocument, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "scale", "delta", "count", "mean", "median", "max"]).map_err(csv_err)?;
    for g in &doc.summary.groups {
        w.write_record([
            g.method.clone(),
            opt(g.scale),
            opt(g.delta),
            g.count.to_string(),
            g.mean.to_string(),
            g.median.to_string(),
            g.max.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
