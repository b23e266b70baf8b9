//! `g2(tau)` curves and their oscillation period.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::g2_tau;
use crate::lindblad::{build_liouvillian, mean_field_steady_state, steady_state, two_time_correlations, SystemParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauCurve {
    pub delta_a: f64,
    pub delta_b: f64,
    pub tau: Vec<f64>,
    /// Gaussian expansion of the regression correlators.
    pub g2: Vec<f64>,
    /// Direct regression of the intensity correlation.
    pub g2_regression: Vec<f64>,
    /// `max |s(tau) - s_reversed(tau)| / max |s|`.
    pub ordering_discrepancy: f64,
    pub n_tot: f64,
}

/// `g2(tau)` on a non-decreasing delay grid at one parameter point.
pub fn g2_tau_curve(p: &SystemParams, tau: &[f64], cutoffs: (usize, usize)) -> Result<TauCurve> {
    let mf = mean_field_steady_state(p)?;
    let l = build_liouvillian(p, Some((mf.alpha, mf.beta)), cutoffs)?;
    let rho = steady_state(&l)?;
    let corr = two_time_correlations(&l, &rho, tau)?;
    let g2 = g2_tau(mf.alpha, &corr)?;
    Ok(TauCurve {
        delta_a: p.delta_a,
        delta_b: p.delta_b,
        tau: tau.to_vec(),
        g2,
        g2_regression: corr.g2_regression.clone(),
        ordering_discrepancy: corr.ordering_discrepancy(),
        n_tot: mf.alpha.norm_sqr() + corr.n_zero,
    })
}

/// Period of the strongest spectral line of `values` above `min_freq` (Hz),
/// from a Hann-windowed periodogram on a uniform grid of spacing `dt`.
pub fn dominant_period(values: &[f64], dt: f64, min_freq: f64) -> Result<f64> {
    let n = values.len();
    if n < 8 || !(dt > 0.0) {
        return Err(Error::invalid("need at least 8 uniformly spaced samples"));
    }
    let nyquist = 0.5 / dt;
    if !(min_freq >= 0.0 && min_freq < nyquist) {
        return Err(Error::invalid(format!("minimum frequency {min_freq} outside [0, {nyquist})")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let windowed: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| (v - mean) * (0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / (n - 1) as f64).cos()))
        .collect();
    let power = |f: f64| {
        let w = std::f64::consts::TAU * f * dt;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, v) in windowed.iter().enumerate() {
            re += v * (w * k as f64).cos();
            im -= v * (w * k as f64).sin();
        }
        re * re + im * im
    };
    // resolution well below the 1 / (n dt) line width
    let df = 1.0 / (64.0 * n as f64 * dt);
    let steps = ((nyquist - min_freq) / df).floor() as usize;
    let mut best = (min_freq.max(df), -1.0);
    for k in 0..=steps {
        let f = (min_freq + k as f64 * df).max(df);
        let pw = power(f);
        if pw > best.1 {
            best = (f, pw);
        }
    }
    if !(best.1 > 0.0) {
        return Err(Error::invalid("signal has no oscillating component"));
    }
    Ok(1.0 / best.0)
}
