//! Multi-packet acquisition and jackknife statistics.

use rayon::prelude::*;
use serde::Serialize;

use super::calibration::{calibrate, correct_moments, CalibrationConstants};
use super::moments::MomentSet;
use super::synth::{estimate_moments, packet_seeds, synth_traces};
use crate::error::{Error, Result};
use crate::gaussian::{g2_zero, g2prime_from_fourth_moments, gaussian_params_from_moments, GaussianState};
use crate::C64;

/// Fewest packets for which the averaged `g2` is trusted to be Gaussian.
pub const MIN_PACKETS: usize = 20;

/// Corrected moments of one pump-on / pump-off packet pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketPair {
    pub on: MomentSet,
    pub off: MomentSet,
    /// Constants fitted on this pair's pump-off data.
    pub calibration: CalibrationConstants,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketStatistics {
    /// `g2` of the moments averaged over all packets.
    pub g2: f64,
    pub g2_stderr: f64,
    /// Estimated state from the averaged moments.
    pub state: GaussianState,
    pub alpha_stderr: C64,
    pub n_stderr: f64,
    pub s_stderr: C64,
    /// Fourth-moment estimate and its error, when every order is present.
    pub g2_prime: Option<(f64, f64)>,
    pub n_packets: usize,
    pub warnings: Vec<String>,
}

struct Estimate {
    state: GaussianState,
    g2: f64,
    g2_prime: Option<f64>,
}

fn estimate(on: &[MomentSet], off: &[MomentSet], n_th: f64, n_h: f64) -> Result<Estimate> {
    let on = MomentSet::mean(on)?;
    let off = MomentSet::mean(off)?;
    let state = gaussian_params_from_moments(&on, &off, n_th, n_h)?;
    let g2 = g2_zero(&state)?;
    let full = (1..=4).all(|o| on.has_order(o) && off.has_order(o));
    let g2_prime = if full { Some(g2prime_from_fourth_moments(&on, &off, state.alpha, n_th)?) } else { None };
    Ok(Estimate { state, g2, g2_prime })
}

/// Jackknife standard error of a statistic from its leave-one-out values.
fn jackknife(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    ((k - 1.0) / k * values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt()
}

/// Averages corrected moments over packets, forms `g2` once, and estimates
/// errors by leaving one packet out at a time.
pub fn packet_statistics(packets: &[(MomentSet, MomentSet)], n_th: f64, n_h: f64) -> Result<PacketStatistics> {
    let count = packets.len();
    if count < 2 {
        return Err(Error::invalid(format!("need at least 2 packets for error estimates, got {count}")));
    }
    let mut warnings = Vec::new();
    if count < MIN_PACKETS {
        warnings.push(format!("only {count} packets (< {MIN_PACKETS}): the g2 distribution may be non-Gaussian"));
    }
    let on: Vec<MomentSet> = packets.iter().map(|p| p.0.clone()).collect();
    let off: Vec<MomentSet> = packets.iter().map(|p| p.1.clone()).collect();
    let all = estimate(&on, &off, n_th, n_h)?;
    let loo: Vec<Estimate> = (0..count)
        .into_par_iter()
        .map(|skip| {
            let keep = |v: &[MomentSet]| v.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, m)| m.clone()).collect::<Vec<_>>();
            estimate(&keep(&on), &keep(&off), n_th, n_h)
        })
        .collect::<Result<_>>()?;
    let column = |f: &dyn Fn(&Estimate) -> f64| jackknife(&loo.iter().map(f).collect::<Vec<_>>());
    let g2_prime = all.g2_prime.map(|v| (v, column(&|e| e.g2_prime.unwrap_or(f64::NAN))));
    Ok(PacketStatistics {
        g2: all.g2,
        g2_stderr: column(&|e| e.g2),
        state: all.state,
        alpha_stderr: C64::new(column(&|e| e.state.alpha.re), column(&|e| e.state.alpha.im)),
        n_stderr: column(&|e| e.state.n),
        s_stderr: C64::new(column(&|e| e.state.s.re), column(&|e| e.state.s.im)),
        g2_prime,
        n_packets: count,
        warnings,
    })
}

/// Settings of a synthetic acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Acquisition {
    /// Mixer and amplifier of the simulated chain.
    pub chain: CalibrationConstants,
    /// Pump-off occupation of the measured mode.
    pub n_th: f64,
    pub packet_size: usize,
    pub n_packets: usize,
    pub seed: u64,
}

/// Simulates pump-on / pump-off packet pairs for `truth`, calibrates each pair
/// on its own pump-off data and returns the corrected moments.
///
/// Pump-off packets see the thermal state `n_th`, so calibration rescales the
/// pump-off quadrature variance to `n_h + n_th`.
pub fn acquire(truth: &GaussianState, acq: &Acquisition) -> Result<Vec<PacketPair>> {
    acq.chain.validate()?;
    let off_state = GaussianState::thermal(acq.n_th);
    let seeds = packet_seeds(acq.seed, 2 * acq.n_packets);
    (0..acq.n_packets)
        .into_par_iter()
        .map(|k| {
            let raw_on = estimate_moments(&synth_traces(truth, &acq.chain, acq.packet_size, true, seeds[2 * k])?)?;
            let raw_off = estimate_moments(&synth_traces(&off_state, &acq.chain, acq.packet_size, false, seeds[2 * k + 1])?)?;
            let cal = calibrate(&raw_off, acq.chain.n_h + acq.n_th, acq.chain.delta_f)?;
            Ok(PacketPair { on: correct_moments(&raw_on, &cal)?, off: correct_moments(&raw_off, &cal)?, calibration: cal })
        })
        .collect()
}

/// [`acquire`] followed by [`packet_statistics`].
pub fn run_experiment(truth: &GaussianState, acq: &Acquisition) -> Result<PacketStatistics> {
    let pairs = acquire(truth, acq)?;
    let packets: Vec<(MomentSet, MomentSet)> = pairs.into_iter().map(|p| (p.on, p.off)).collect();
    packet_statistics(&packets, acq.n_th, acq.chain.n_h)
}
