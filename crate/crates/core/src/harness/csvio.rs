//! CSV schemas. All files have a header row; times and indices are 1-based
//! integers and real values are written in shortest round-trip exponent form.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::basis::{HFunction, Interval};
use crate::error::{Error, Result};
use crate::spectral::{RegressorOperator, RegressorPanel};

use super::experiments::MetricsReport;

fn stream_err(e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: "<stream>".into(),
        message: e.to_string(),
    }
}

fn real(v: f64) -> String {
    format!("{v:e}")
}

/// Creates `path` and hands a writer to `f`; errors carry the path.
pub fn to_file(path: &Path, f: impl FnOnce(&mut File) -> Result<()>) -> Result<()> {
    let with_path = |e: Error| match e {
        Error::Io { message, .. } => Error::Io {
            path: path.display().to_string(),
            message,
        },
        other => other,
    };
    let mut file = File::create(path).map_err(|e| with_path(stream_err(e)))?;
    f(&mut file).map_err(with_path)
}

/// Opens `path` and hands a reader to `f`; errors carry the path.
pub fn from_file<T>(path: &Path, f: impl FnOnce(&mut File) -> Result<T>) -> Result<T> {
    let with_path = |e: Error| match e {
        Error::Io { message, .. } => Error::Io {
            path: path.display().to_string(),
            message,
        },
        other => other,
    };
    let mut file = File::open(path).map_err(|e| with_path(stream_err(e)))?;
    f(&mut file).map_err(with_path)
}

/// Header plus rows of preformatted fields.
pub fn write_table<W: Write>(
    w: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(stream_err)?;
    for row in rows {
        out.write_record(&row).map_err(stream_err)?;
    }
    out.flush().map_err(stream_err)
}

pub fn write_efmqe<W: Write>(w: W, report: &MetricsReport) -> Result<()> {
    write_table(
        w,
        &["time", "efmqe"],
        report
            .efmqe
            .iter()
            .map(|r| vec![r.time.to_string(), real(r.efmqe)]),
    )
}

pub fn write_cemqe<W: Write>(w: W, report: &MetricsReport) -> Result<()> {
    write_table(
        w,
        &["x", "time", "cemqe"],
        report
            .cemqe
            .iter()
            .map(|r| vec![real(r.x), r.time.to_string(), real(r.cemqe)]),
    )
}

pub fn write_sweep<W: Write>(w: W, report: &MetricsReport) -> Result<()> {
    write_table(
        w,
        &["N", "estimator", "median_error"],
        report.consistency.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.estimator.to_string(),
                real(r.median_error),
            ]
        }),
    )
}

pub fn write_normality<W: Write>(w: W, report: &MetricsReport) -> Result<()> {
    write_table(
        w,
        &["frequency", "param", "mean", "var", "skew"],
        report.normality.iter().map(|r| {
            vec![
                r.frequency.to_string(),
                r.param.to_string(),
                real(r.mean),
                real(r.var),
                real(r.skew),
            ]
        }),
    )
}

pub fn write_beta<W: Write>(w: W, beta: &[HFunction]) -> Result<()> {
    write_table(
        w,
        &["param_index", "mode_index", "coefficient"],
        beta.iter().enumerate().flat_map(|(j, b)| {
            b.coeffs()
                .iter()
                .enumerate()
                .map(move |(k, c)| vec![(j + 1).to_string(), (k + 1).to_string(), real(*c)])
        }),
    )
}

/// A functional time series as `time,mode,coefficient`.
pub fn write_series<W: Write>(w: W, series: &[HFunction]) -> Result<()> {
    write_table(
        w,
        &["time", "mode", "coefficient"],
        series.iter().enumerate().flat_map(|(t, f)| {
            f.coeffs()
                .iter()
                .enumerate()
                .map(move |(k, c)| vec![(t + 1).to_string(), (k + 1).to_string(), real(*c)])
        }),
    )
}

/// Regressor operators as `time,param,row,col,value`. Diagonal operators
/// write only their diagonal.
pub fn write_regressors<W: Write>(w: W, panel: &RegressorPanel) -> Result<()> {
    let k = panel.k();
    let mut rows = Vec::new();
    for t in 0..panel.n() {
        for j in 0..panel.p() {
            let op = panel.get(t, j);
            for r in 0..k {
                for c in 0..k {
                    let v = op.entry(r, c);
                    if r == c || (!op.is_diagonal() && v != 0.0) {
                        rows.push(vec![
                            (t + 1).to_string(),
                            (j + 1).to_string(),
                            (r + 1).to_string(),
                            (c + 1).to_string(),
                            real(v),
                        ]);
                    }
                }
            }
        }
    }
    write_table(w, &["time", "param", "row", "col", "value"], rows)
}

pub fn write_key_values<W: Write>(w: W, pairs: &[(String, String)]) -> Result<()> {
    write_table(
        w,
        &["key", "value"],
        pairs.iter().map(|(k, v)| vec![k.clone(), v.clone()]),
    )
}

fn read_table<R: Read>(r: R, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let found = reader.headers().map_err(stream_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(stream_err(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader.records().map(|r| r.map_err(stream_err)).collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| stream_err(format!("record {line}: cannot parse `{raw}`")))
}

fn index(rec: &csv::StringRecord, i: usize, line: usize) -> Result<usize> {
    let v: usize = field(rec, i, line)?;
    if v == 0 {
        return Err(stream_err(format!("record {line}: indices are 1-based")));
    }
    Ok(v - 1)
}

/// Reads a `time,mode,coefficient` series; every (time, mode) pair up to the
/// largest index must be present exactly once.
pub fn read_series<R: Read>(r: R, interval: Interval) -> Result<Vec<HFunction>> {
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (line, rec) in read_table(r, &["time", "mode", "coefficient"])?
        .iter()
        .enumerate()
    {
        let key = (index(rec, 0, line + 1)?, index(rec, 1, line + 1)?);
        if cells.insert(key, field(rec, 2, line + 1)?).is_some() {
            return Err(stream_err(format!(
                "duplicate entry for time {}, mode {}",
                key.0 + 1,
                key.1 + 1
            )));
        }
    }
    let n = cells.keys().map(|k| k.0 + 1).max().unwrap_or(0);
    let k = cells.keys().map(|k| k.1 + 1).max().unwrap_or(0);
    if cells.len() != n * k || n == 0 {
        return Err(stream_err(format!(
            "series is incomplete: {} entries for {n} times x {k} modes",
            cells.len()
        )));
    }
    (0..n)
        .map(|t| HFunction::new((0..k).map(|m| cells[&(t, m)]).collect(), interval))
        .collect()
}

/// Reads `time,param,row,col,value`; missing entries are zero. Operators with
/// no off-diagonal entries are stored as diagonal.
pub fn read_regressors<R: Read>(r: R) -> Result<Vec<Vec<RegressorOperator>>> {
    let records = read_table(r, &["time", "param", "row", "col", "value"])?;
    let mut cells = Vec::with_capacity(records.len());
    for (line, rec) in records.iter().enumerate() {
        let l = line + 1;
        cells.push((
            index(rec, 0, l)?,
            index(rec, 1, l)?,
            index(rec, 2, l)?,
            index(rec, 3, l)?,
            field::<f64>(rec, 4, l)?,
        ));
    }
    let n = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let p = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    let k = cells.iter().map(|c| c.2.max(c.3) + 1).max().unwrap_or(0);
    if n == 0 {
        return Err(stream_err("no regressor entries"));
    }
    let mut mats = vec![vec![DMatrix::<f64>::zeros(k, k); p]; n];
    for &(t, j, r, c, v) in &cells {
        mats[t][j][(r, c)] = v;
    }
    mats.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|m| {
                    let off_diag = (0..k).any(|r| (0..k).any(|c| r != c && m[(r, c)] != 0.0));
                    if off_diag {
                        RegressorOperator::dense(m)
                    } else {
                        RegressorOperator::diagonal(m.diagonal().iter().copied().collect())
                    }
                })
                .collect()
        })
        .collect()
}
