use std::io::{Read, Write};
use std::path::Path;

use super::config::Interpolation;
use super::fmt_f64;
use crate::error::{ArzError, Result};
use crate::transforms::BoundaryMeasurement;

/// Time-ordered boundary sensor records.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySeries {
    records: Vec<BoundaryMeasurement>,
    interpolation: Interpolation,
}

impl BoundarySeries {
    pub fn new(records: Vec<BoundaryMeasurement>, interpolation: Interpolation) -> Result<Self> {
        if records.len() < 2 {
            return Err(ArzError::Data(format!(
                "need at least two measurement rows to interpolate, got {}",
                records.len()
            )));
        }
        for (i, w) in records.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(ArzError::Data(format!(
                    "measurement times must be strictly increasing (row {}: t = {} after t = {})",
                    i + 2,
                    w[1].t,
                    w[0].t
                )));
            }
        }
        Ok(Self { records, interpolation })
    }

    pub fn records(&self) -> &[BoundaryMeasurement] {
        &self.records
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn start(&self) -> f64 {
        self.records[0].t
    }

    pub fn end(&self) -> f64 {
        self.records[self.records.len() - 1].t
    }

    /// Fails unless the series covers `[t0, t1]`.
    pub fn require_coverage(&self, t0: f64, t1: f64) -> Result<()> {
        let tol = 1e-9 * t1.abs().max(1.0);
        if self.start() > t0 + tol || self.end() < t1 - tol {
            return Err(ArzError::Data(format!(
                "measurements span [{}, {}] s but [{t0}, {t1}] s is required",
                self.start(),
                self.end()
            )));
        }
        Ok(())
    }

    /// Measurement at time `t`. Sample times are returned verbatim.
    pub fn at(&self, t: f64) -> Result<BoundaryMeasurement> {
        let tol = 1e-9 * t.abs().max(1.0);
        if t < self.start() - tol || t > self.end() + tol {
            return Err(ArzError::Data(format!(
                "t = {t} s is outside the measured window [{}, {}] s",
                self.start(),
                self.end()
            )));
        }
        let idx = self.records.partition_point(|m| m.t < t);
        if idx < self.records.len() && self.records[idx].t == t {
            return Ok(self.records[idx]);
        }
        if idx == 0 {
            return Ok(BoundaryMeasurement { t, ..self.records[0] });
        }
        if idx == self.records.len() {
            return Ok(BoundaryMeasurement { t, ..self.records[idx - 1] });
        }
        let (a, b) = (&self.records[idx - 1], &self.records[idx]);
        Ok(match self.interpolation {
            Interpolation::Hold => BoundaryMeasurement { t, ..*a },
            Interpolation::Linear => {
                let theta = (t - a.t) / (b.t - a.t);
                let lerp = |x: f64, y: f64| x + theta * (y - x);
                BoundaryMeasurement {
                    t,
                    y_q_in: lerp(a.y_q_in, b.y_q_in),
                    y_q_out: lerp(a.y_q_out, b.y_q_out),
                    y_v_out: lerp(a.y_v_out, b.y_v_out),
                }
            }
        })
    }
}

pub fn load_measurements(path: &Path, interpolation: Interpolation) -> Result<BoundarySeries> {
    let file = std::fs::File::open(path).map_err(|e| ArzError::io(path, e))?;
    read_measurements(file, interpolation)
}

/// Reads CSV with columns `t,q_in,q_out,v_out` (any order, extra columns ignored).
pub fn read_measurements<R: Read>(input: R, interpolation: Interpolation) -> Result<BoundarySeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| ArzError::Data(format!("cannot read header: {e}")))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ArzError::Data(format!("missing column `{name}` (expected t,q_in,q_out,v_out)")))
    };
    let cols = [column("t")?, column("q_in")?, column("q_out")?, column("v_out")?];
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| ArzError::Data(format!("row {row_no}: {e}")))?;
        let mut vals = [0.0; 4];
        for (slot, &c) in vals.iter_mut().zip(&cols) {
            let raw = row.get(c).ok_or_else(|| ArzError::Data(format!("row {row_no}: too few fields")))?;
            *slot = raw.parse().map_err(|_| ArzError::Data(format!("row {row_no}: '{raw}' is not a number")))?;
        }
        records.push(
            BoundaryMeasurement::new(vals[0], vals[1], vals[2], vals[3])
                .map_err(|e| ArzError::Data(format!("row {row_no}: {e}")))?,
        );
    }
    BoundarySeries::new(records, interpolation)
}

pub fn write_measurements<W: Write>(out: W, records: &[BoundaryMeasurement]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| ArzError::Data(format!("failed to write measurements: {e}"));
    w.write_record(["t", "q_in", "q_out", "v_out"]).map_err(err)?;
    for m in records {
        w.write_record([fmt_f64(m.t), fmt_f64(m.y_q_in), fmt_f64(m.y_q_out), fmt_f64(m.y_v_out)]).map_err(err)?;
    }
    w.flush().map_err(|e| ArzError::Data(format!("failed to write measurements: {e}")))
}
