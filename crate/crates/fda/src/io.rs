//! Delimited-text layouts for discretized curves and coefficient matrices.
//!
//! The common-grid layout has one row per grid point: the curve values in
//! the leading columns and the shared argument in the last column. The
//! per-curve layout is one file per curve with two columns, argument then
//! value. Floats are written in shortest round-trip form.

use crate::error::{FdaError, Result};
use nalgebra::DMatrix;
use splinet::{CurveSamples, DiscreteCurveSet};
use std::fmt::Write as _;
use std::path::Path;

/// Writes a common-grid curve set: value columns, argument column last.
pub fn write_common_grid(path: &Path, set: &DiscreteCurveSet) -> Result<()> {
    let DiscreteCurveSet::CommonGrid { arguments, values } = set else {
        return Err(FdaError::Config(
            "per-curve sets are written one file per curve".to_string(),
        ));
    };
    let mut out = String::new();
    for (t, &arg) in arguments.iter().enumerate() {
        for c in 0..values.nrows() {
            write!(out, "{}\t", values[(c, t)]).expect("string write");
        }
        writeln!(out, "{arg}").expect("string write");
    }
    write_atomic(path, out.as_bytes())
}

/// Reads the common-grid layout written by [`write_common_grid`].
pub fn read_common_grid(path: &Path) -> Result<DiscreteCurveSet> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| FdaError::io(&name, e))?;
    let mut arguments = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|f| {
                f.parse::<f64>().map_err(|_| FdaError::MalformedData {
                    path: name.clone(),
                    what: format!("line {}: bad number {f:?}", lineno + 1),
                })
            })
            .collect::<Result<_>>()?;
        if fields.len() < 2 {
            return Err(FdaError::MalformedData {
                path: name.clone(),
                what: format!(
                    "line {}: need at least one value and the argument",
                    lineno + 1
                ),
            });
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); fields.len() - 1];
        } else if fields.len() - 1 != columns.len() {
            return Err(FdaError::MalformedData {
                path: name.clone(),
                what: format!("line {}: ragged row", lineno + 1),
            });
        }
        arguments.push(fields[fields.len() - 1]);
        for (c, &v) in fields[..fields.len() - 1].iter().enumerate() {
            columns[c].push(v);
        }
    }
    if columns.is_empty() {
        return Err(FdaError::MalformedData {
            path: name,
            what: "no data rows".to_string(),
        });
    }
    let values = DMatrix::from_fn(columns.len(), arguments.len(), |c, t| columns[c][t]);
    Ok(DiscreteCurveSet::from_matrix(arguments, values)?)
}

/// Reads the list layout: one two-column file (argument, value) per curve.
pub fn read_per_curve_files(paths: &[std::path::PathBuf]) -> Result<DiscreteCurveSet> {
    let mut curves = Vec::with_capacity(paths.len());
    for path in paths {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| FdaError::io(&name, e))?;
        let mut arguments = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(FdaError::MalformedData {
                    path: name.clone(),
                    what: format!("line {}: expected two columns", lineno + 1),
                });
            }
            let parse = |f: &str| {
                f.parse::<f64>().map_err(|_| FdaError::MalformedData {
                    path: name.clone(),
                    what: format!("line {}: bad number {f:?}", lineno + 1),
                })
            };
            arguments.push(parse(fields[0])?);
            values.push(parse(fields[1])?);
        }
        curves.push(CurveSamples { arguments, values });
    }
    Ok(DiscreteCurveSet::per_curve(curves)?)
}

/// Writes a matrix as tab-separated text, one row per line.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{}", m[(r, c)])).collect();
        writeln!(out, "{}", row.join("\t")).expect("string write");
    }
    write_atomic(path, out.as_bytes())
}

/// Writes labels one per line.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        writeln!(out, "{l}").expect("string write");
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| FdaError::io(&name, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(lineno, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| FdaError::MalformedData {
                    path: name.clone(),
                    what: format!("line {}: bad label {l:?}", lineno + 1),
                })
        })
        .collect()
}

/// Write-temp-then-rename so readers never observe partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.display().to_string();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| FdaError::io(&name, e))?;
        }
    }
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, bytes).map_err(|e| FdaError::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| FdaError::io(&name, e))?;
    Ok(())
}
