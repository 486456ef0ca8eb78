//! CSV and JSON artifacts.
//!
//! Trajectory CSV: `#` comment lines, then a header
//! `step,time,<observables...>,trace_error,bond_max,n_tot`. Reals are written
//! as `{:.16e}`, 17 significant digits, which reads back bit-exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tempo_core::engine::Trajectory;
use thiserror::Error;

/// Input file does not have the expected columns.
#[derive(Debug, Error)]
#[error("{path}: {reason}")]
pub struct SchemaError {
    pub path: PathBuf,
    pub reason: String,
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(traj: &Trajectory, comments: &[String]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string(), "time".to_string()];
    header.extend(traj.observables.iter().map(|(n, _)| n.clone()));
    header.extend(["trace_error", "bond_max", "n_tot"].map(String::from));
    w.write_record(&header)?;
    for n in 0..traj.len() {
        let mut row = vec![n.to_string(), real(traj.times[n])];
        row.extend(traj.observables.iter().map(|(_, v)| real(v[n])));
        row.push(real(traj.trace_error[n]));
        row.push(traj.stats.bond_max[n].to_string());
        row.push(traj.stats.n_tot[n].to_string());
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))
}

/// Columns of a numeric CSV with `#` comments.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }
}

/// Reads a CSV whose cells are all numbers; empty cells become NaN.
pub fn read_table(path: &Path) -> Result<Table> {
    let schema = |reason: String| SchemaError { path: path.into(), reason };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| schema(e.to_string()))?;
        for (i, cell) in record.iter().enumerate() {
            let value = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse().map_err(|_| schema(format!("row {}: `{cell}` is not a number", line + 1)))?
            };
            columns[i].push(value);
        }
    }
    Ok(Table { header, columns })
}

/// One line of a sweep summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub value: f64,
    /// Fitted decay rate; absent when not requested or the fit failed.
    pub gamma: Option<f64>,
    pub n_tot: Option<usize>,
    pub bond_max: Option<usize>,
    pub seconds: Option<f64>,
    pub status: String,
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["value", "gamma", "n_tot", "bond_max", "seconds", "status"])?;
    let opt = |x: Option<String>| x.unwrap_or_default();
    for r in rows {
        w.write_record([
            real(r.value),
            opt(r.gamma.map(real)),
            opt(r.n_tot.map(|n| n.to_string())),
            opt(r.bond_max.map(|n| n.to_string())),
            opt(r.seconds.map(|s| format!("{s:.3}"))),
            r.status.clone(),
        ])?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))
}

/// `(K, γ)` pairs from the successful, fitted rows of a memory-length sweep.
pub fn read_gamma_points(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.clone();
    for col in ["value", "gamma"] {
        if !header.iter().any(|h| h == col) {
            return Err(SchemaError { path: path.into(), reason: format!("missing column `{col}`") }.into());
        }
    }
    let mut points = Vec::new();
    for row in rdr.deserialize::<SummaryRow>() {
        let row = row.map_err(|e| SchemaError { path: path.into(), reason: e.to_string() })?;
        let Some(gamma) = row.gamma else { continue };
        if row.status != "ok" {
            continue;
        }
        if row.value < 1.0 || row.value.fract() != 0.0 {
            bail!(SchemaError { path: path.into(), reason: format!("value {} is not a memory length", row.value) });
        }
        points.push((row.value as usize, gamma));
    }
    Ok(points)
}
