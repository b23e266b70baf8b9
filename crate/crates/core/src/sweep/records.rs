//! Sweep records and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::lindblad::SystemParams;
use crate::C64;

/// Frozen CSV header; angular quantities in rad/s.
pub const RECORD_HEADER: [&str; 14] = [
    "delta_a_rad_s",
    "delta_b_rad_s",
    "eta_re_rad_s",
    "eta_im_rad_s",
    "n_tot",
    "g2",
    "g2_prime",
    "alpha_re",
    "alpha_im",
    "n",
    "s_re",
    "s_im",
    "status",
    "warnings",
];

/// Observables at one `(delta_a, delta_b, eta)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub delta_a: f64,
    pub delta_b: f64,
    pub eta: C64,
    pub n_tot: f64,
    pub g2: f64,
    pub g2_prime: f64,
    pub alpha: C64,
    pub n: f64,
    pub s: C64,
    /// `"ok"` or the failure message.
    pub status: String,
    pub warnings: Vec<String>,
}

impl SweepRecord {
    pub const OK: &'static str = "ok";

    pub fn failed(p: &SystemParams, e: &Error) -> Self {
        let nan = f64::NAN;
        Self {
            delta_a: p.delta_a,
            delta_b: p.delta_b,
            eta: p.eta_a,
            n_tot: nan,
            g2: nan,
            g2_prime: nan,
            alpha: C64::new(nan, nan),
            n: nan,
            s: C64::new(nan, nan),
            status: e.to_string(),
            warnings: Vec::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Self::OK
    }

    fn fields(&self) -> [String; 14] {
        let f = |x: f64| format!("{x:e}");
        [
            f(self.delta_a),
            f(self.delta_b),
            f(self.eta.re),
            f(self.eta.im),
            f(self.n_tot),
            f(self.g2),
            f(self.g2_prime),
            f(self.alpha.re),
            f(self.alpha.im),
            f(self.n),
            f(self.s.re),
            f(self.s.im),
            self.status.clone(),
            self.warnings.join("; "),
        ]
    }

    fn from_fields(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != RECORD_HEADER.len() {
            return Err(Error::invalid(format!("expected {} columns, got {}", RECORD_HEADER.len(), row.len())));
        }
        let num = |k: usize| -> Result<f64> { row[k].parse::<f64>().map_err(|_| Error::invalid(format!("column {}: bad number {:?}", RECORD_HEADER[k], &row[k]))) };
        Ok(Self {
            delta_a: num(0)?,
            delta_b: num(1)?,
            eta: C64::new(num(2)?, num(3)?),
            n_tot: num(4)?,
            g2: num(5)?,
            g2_prime: num(6)?,
            alpha: C64::new(num(7)?, num(8)?),
            n: num(9)?,
            s: C64::new(num(10)?, num(11)?),
            status: row[12].to_string(),
            warnings: if row[13].is_empty() { Vec::new() } else { row[13].split("; ").map(String::from).collect() },
        })
    }
}

/// Writes records with the frozen header.
pub fn records_to_csv<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut buf = Vec::new();
    records_to_csv(&mut buf, records)?;
    write_atomic(path, &buf)
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(Error::invalid(format!("unexpected CSV header {header:?}")));
    }
    r.records().map(|row| SweepRecord::from_fields(&row?)).collect()
}
