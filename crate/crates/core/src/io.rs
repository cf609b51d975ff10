//! CSV path files and their JSON sidecars.
//!
//! A MAP path is stored as `t,xi,theta_0,theta_1`, a self-similar path as
//! `t,x_0,x_1`, one row per alive grid point. Floats carry 17 significant
//! digits so reading a file back reproduces every value exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::path::{MapPath, SsmpPath, TimeGrid, UnitVector};

/// Round-trip float formatting.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sidecar metadata written next to a path file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMetadata {
    pub model: ModelSpec,
    pub alpha: f64,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub kill_index: Option<usize>,
}

pub fn write_map_path(file: &Path, p: &MapPath) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(file)?));
    w.write_record(["t", "xi", "theta_0", "theta_1"])?;
    for i in 0..p.len() {
        let th = p.theta[i].components();
        w.write_record([
            fmt_f64(p.grid.times()[i]),
            fmt_f64(p.xi[i]),
            fmt_f64(th[0]),
            fmt_f64(th[1]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ssmp_path(file: &Path, p: &SsmpPath) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(file)?));
    w.write_record(["t", "x_0", "x_1"])?;
    for i in 0..p.len() {
        w.write_record([fmt_f64(p.grid.times()[i]), fmt_f64(p.x[i][0]), fmt_f64(p.x[i][1])])?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows(file: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(file)?));
    let got: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if got != header {
        return Err(Error::validation(format!(
            "{}: expected header {header:?}, found {got:?}",
            file.display()
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| {
                    Error::validation(format!("{}: row {}: {e}", file.display(), line + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::validation(format!("{}: no rows", file.display())));
    }
    Ok(rows)
}

/// Reads a MAP path. The grid is the file's rows; a dead tail, if any, is
/// recorded only in the sidecar, so the returned path is fully alive.
pub fn read_map_path(file: &Path) -> Result<MapPath> {
    let rows = read_rows(file, &["t", "xi", "theta_0", "theta_1"])?;
    let grid = TimeGrid::from_times(rows.iter().map(|r| r[0]).collect())?;
    let xi = rows.iter().map(|r| r[1]).collect();
    let theta = rows
        .iter()
        .map(|r| UnitVector::new([r[2], r[3]]))
        .collect::<Result<Vec<_>>>()?;
    MapPath::new(grid, xi, theta, None)
}

pub fn read_ssmp_path(file: &Path) -> Result<SsmpPath> {
    let rows = read_rows(file, &["t", "x_0", "x_1"])?;
    let grid = TimeGrid::from_times(rows.iter().map(|r| r[0]).collect())?;
    SsmpPath::new(grid, rows.iter().map(|r| [r[1], r[2]]).collect(), None)
}

pub fn write_json<T: Serialize>(file: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(file)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(file: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(file)?))?)
}
