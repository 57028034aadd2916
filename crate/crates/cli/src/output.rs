//! CSV and JSON files.
//!
//! Numbers are written in Rust's shortest round-trip form, so reading a
//! file back reproduces every value bit for bit and identical runs produce
//! identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mems_core::{Grid1D, MembraneState};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Output directory that creates itself on first use.
#[derive(Clone, Debug)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv<I, R>(&self, name: &str, header: &[String], rows: I) -> CliResult<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.path(name);
        let err = |e: csv::Error| CliError::Csv {
            path: path.clone(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(row).map_err(err)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let path = self.path(name);
        let io = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e.into(),
        })?;
        writeln!(w).and_then(|_| w.flush()).map_err(io)?;
        Ok(path)
    }
}

/// Header `name, x_0, x_1, ...` followed by one row per labelled profile.
pub fn profile_header(label: &str, grid: &Grid1D) -> Vec<String> {
    std::iter::once(label.to_owned())
        .chain(grid.nodes().iter().map(|&x| num(x)))
        .collect()
}

pub fn profile_row(label: f64, u: &MembraneState) -> Vec<String> {
    std::iter::once(num(label))
        .chain(u.values().iter().map(|&v| num(v)))
        .collect()
}

/// Reads an initial profile from a CSV with header `x,u` and one row per
/// node of `grid`.
pub fn read_profile(path: &Path, grid: &Grid1D) -> CliResult<MembraneState> {
    let bad = |reason: String| CliError::invalid("initial.path", format!("{}: {reason}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "x" || &header[1] != "u" {
        return Err(bad("expected the header `x,u`".into()));
    }
    let mut u = Vec::with_capacity(grid.len());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field =
            |k: usize| -> CliResult<f64> { rec[k].parse::<f64>().map_err(|e| bad(format!("row {}: {e}", row + 1))) };
        let (x, v) = (field(0)?, field(1)?);
        match grid.nodes().get(row) {
            Some(&node) if (node - x).abs() <= 1e-9 => u.push(v),
            Some(&node) => return Err(bad(format!("row {}: x = {x} but the grid node is {node}", row + 1))),
            None => return Err(bad(format!("more than {} rows", grid.len()))),
        }
    }
    if u.len() != grid.len() {
        return Err(bad(format!("{} rows for {} grid nodes", u.len(), grid.len())));
    }
    let state = MembraneState::new(grid.clone(), u, 0.0).map_err(|e| bad(e.to_string()))?;
    state.check_admissible().map_err(|e| bad(e.to_string()))?;
    Ok(state)
}
