//! Raw trace files: little-endian `f64` arrays with a JSON sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::RawTraceSet;
use crate::error::{Error, Result};
use crate::io::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub sample_rate: f64,
    pub packet_size: usize,
    pub pump_on: bool,
    pub seed: u64,
    pub x_dc: f64,
    pub y_dc: f64,
}

/// Paths `<stem>.x.f64`, `<stem>.y.f64` and `<stem>.json`.
pub fn trace_paths(stem: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".x.f64"), with(".y.f64"), with(".json"))
}

fn to_bytes(v: &[f64]) -> Vec<u8> {
    v.iter().flat_map(|x| x.to_le_bytes()).collect()
}

fn from_bytes(b: &[u8], path: &Path) -> Result<Vec<f64>> {
    if !b.len().is_multiple_of(8) {
        return Err(Error::invalid(format!("{} is not a whole number of f64 values", path.display())));
    }
    Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect())
}

pub fn write_traces(stem: &Path, t: &RawTraceSet) -> Result<()> {
    t.validate()?;
    let (xp, yp, jp) = trace_paths(stem);
    write_atomic(&xp, &to_bytes(&t.x))?;
    write_atomic(&yp, &to_bytes(&t.y))?;
    let side = TraceSidecar {
        sample_rate: t.sample_rate,
        packet_size: t.packet_size,
        pump_on: t.pump_on,
        seed: t.seed,
        x_dc: t.x_dc,
        y_dc: t.y_dc,
    };
    write_atomic(&jp, serde_json::to_string_pretty(&side)?.as_bytes())
}

pub fn read_traces(stem: &Path) -> Result<RawTraceSet> {
    let (xp, yp, jp) = trace_paths(stem);
    let side: TraceSidecar = serde_json::from_slice(&std::fs::read(&jp)?)?;
    let t = RawTraceSet {
        x: from_bytes(&std::fs::read(&xp)?, &xp)?,
        y: from_bytes(&std::fs::read(&yp)?, &yp)?,
        x_dc: side.x_dc,
        y_dc: side.y_dc,
        pump_on: side.pump_on,
        sample_rate: side.sample_rate,
        packet_size: side.packet_size,
        seed: side.seed,
    };
    t.validate()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianState;
    use crate::measurement::{synth_traces, CalibrationConstants};

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("packet_0");
        let t = synth_traces(&GaussianState::thermal(0.1), &CalibrationConstants::ideal(2.0, 24e6), 257, true, 8).unwrap();
        write_traces(&stem, &t).unwrap();
        assert_eq!(std::fs::metadata(trace_paths(&stem).0).unwrap().len(), 257 * 8);
        assert_eq!(read_traces(&stem).unwrap(), t);
        std::fs::write(trace_paths(&stem).1, [0u8; 12]).unwrap();
        assert!(read_traces(&stem).is_err());
    }
}
