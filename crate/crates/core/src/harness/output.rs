use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::fmt_f64;
use super::metrics::ErrorSample;
use crate::error::{ArzError, Result};
use crate::grid::Grid;
use crate::solver::FieldState;

/// CSV file writer that reports failures against its path.
pub struct CsvSink {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| ArzError::io(path, e))?;
        let mut sink = Self { path: path.to_path_buf(), inner: csv::Writer::from_writer(BufWriter::new(file)) };
        sink.row(header.iter().map(|s| s.to_string()))?;
        Ok(sink)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<()> {
        self.inner.write_record(fields).map_err(|e| self.csv_err(e))
    }

    fn csv_err(&self, e: csv::Error) -> ArzError {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => ArzError::io(&self.path, io),
            other => ArzError::Data(format!("{}: {other:?}", self.path.display())),
        }
    }

    pub fn numbers(&mut self, values: &[f64]) -> Result<()> {
        self.row(values.iter().map(|&v| fmt_f64(v)))
    }

    /// One `t,x,rho,v` row per cell.
    pub fn field(&mut self, grid: &Grid, state: &FieldState) -> Result<()> {
        for i in 0..state.len() {
            self.numbers(&[state.t, grid.cell_center(i), state.rho[i], state.v[i]])?;
        }
        Ok(())
    }

    pub fn error(&mut self, e: &ErrorSample) -> Result<()> {
        self.numbers(&[e.t, e.l2_rho, e.l2_v, e.rel_rho, e.rel_v])
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| ArzError::io(&self.path, e))
    }
}

pub const FIELD_HEADER: &[&str] = &["t", "x", "rho", "v"];
pub const ERROR_HEADER: &[&str] = &["t", "l2_rho_err", "l2_v_err", "rel_rho_err", "rel_v_err"];

/// `key: value` lines.
pub fn write_summary(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| ArzError::io(path, e))?);
    for (k, v) in entries {
        writeln!(f, "{k}: {v}").map_err(|e| ArzError::io(path, e))?;
    }
    f.flush().map_err(|e| ArzError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| ArzError::io(dir, e))
}
