//! Synthetic detection chain and moment processing.
//!
//! Traces of `a + h^dag` are synthesized through the IQ-mixer model, reduced
//! to sample moments, calibrated on pump-off data, corrected back to true
//! quadrature moments and averaged over packets.

mod calibration;
mod moments;
mod packets;
mod synth;
mod traces;

pub use calibration::{calibrate, correct_moments, distort_moments, CalibrationConstants, MAX_EPSILON};
pub use moments::{moment_keys, MomentSet, MAX_ORDER};
pub use packets::{acquire, packet_statistics, run_experiment, Acquisition, PacketPair, PacketStatistics, MIN_PACKETS};
pub use synth::{ac_covariance, estimate_moments, model_moments, nyquist_rate, packet_seeds, synth_traces, RawTraceSet};
pub use traces::{read_traces, trace_paths, write_traces, TraceSidecar};
