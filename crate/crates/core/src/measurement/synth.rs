//! Synthetic quadrature traces and their sample moments.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibration::{distort_moments, CalibrationConstants};
use super::moments::{moment_keys, MomentSet};
use crate::error::{Error, Result};
use crate::gaussian::{moments_from_cumulants, quadrature_moments, GaussianState};
use crate::C64;

/// Relative slack on the positive-semidefinite check of the AC covariance.
const PSD_TOL: f64 = 1e-12;

/// Samples summed serially before partial sums are combined.
const CHUNK: usize = 1 << 16;

/// One digitized packet of raw mixer output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTraceSet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_dc: f64,
    pub y_dc: f64,
    pub pump_on: bool,
    /// Hz.
    pub sample_rate: f64,
    pub packet_size: usize,
    pub seed: u64,
}

impl RawTraceSet {
    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.packet_size || self.y.len() != self.packet_size {
            return Err(Error::DimensionMismatch(format!(
                "trace lengths {} and {} differ from packet size {}",
                self.x.len(),
                self.y.len(),
                self.packet_size
            )));
        }
        if self.packet_size == 0 {
            return Err(Error::invalid("empty trace"));
        }
        Ok(())
    }
}

/// Covariance `[[<X^2>, <XY>], [<XY>, <Y^2>]]` of the AC quadratures of
/// `d + h^dag`.
pub fn ac_covariance(truth: &GaussianState, n_h: f64) -> [[f64; 2]; 2] {
    let n = truth.n + n_h;
    [[n + truth.s.re, truth.s.im], [truth.s.im, n - truth.s.re]]
}

/// Lower Cholesky factor of a 2x2 covariance, rejecting indefinite input.
fn cholesky2(c: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let scale = c[0][0].abs().max(c[1][1].abs()).max(f64::MIN_POSITIVE);
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    if c[0][0] < -PSD_TOL * scale || c[1][1] < -PSD_TOL * scale || det < -PSD_TOL * scale * scale {
        return Err(Error::NonPhysical(format!("quadrature covariance {c:?} is not positive semidefinite")));
    }
    let l00 = c[0][0].max(0.0).sqrt();
    let l10 = if l00 > 0.0 { c[1][0] / l00 } else { 0.0 };
    let l11 = (c[1][1] - l10 * l10).max(0.0).sqrt();
    Ok([[l00, 0.0], [l10, l11]])
}

/// Sample rate for white noise filling the band `delta_f`.
pub fn nyquist_rate(delta_f: f64) -> f64 {
    2.0 * delta_f
}

/// Raw traces of `a + h^dag` for one packet.
///
/// The AC part is a stationary Gaussian process with covariance
/// [`ac_covariance`]; the DC part is `sqrt 2 (Re alpha, Im alpha)` plus the
/// packet-mean fluctuation. Both pass through the mixer model of `cal`.
pub fn synth_traces(truth: &GaussianState, cal: &CalibrationConstants, packet_size: usize, pump_on: bool, seed: u64) -> Result<RawTraceSet> {
    cal.validate_mixer()?;
    if packet_size == 0 {
        return Err(Error::invalid("packet size must be positive"));
    }
    let l = cholesky2(ac_covariance(truth, cal.n_h))?;
    let (sx, sy, eps) = (cal.g_x.sqrt(), cal.g_y.sqrt(), cal.epsilon);
    let mixer = |u: f64, v: f64| {
        let x = l[0][0] * u;
        let y = l[1][0] * u + l[1][1] * v;
        (sx * x, sy * (y + eps * x))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(packet_size);
    let mut y = Vec::with_capacity(packet_size);
    for _ in 0..packet_size {
        let (xr, yr) = mixer(rng.sample(StandardNormal), rng.sample(StandardNormal));
        x.push(xr);
        y.push(yr);
    }
    let root_n = (packet_size as f64).sqrt();
    let (u, v): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    let (nx, ny) = mixer(u / root_n, v / root_n);
    let mean_x = std::f64::consts::SQRT_2 * truth.alpha.re;
    let mean_y = std::f64::consts::SQRT_2 * truth.alpha.im;
    Ok(RawTraceSet {
        x,
        y,
        x_dc: sx * mean_x + nx,
        y_dc: sy * (mean_y + eps * mean_x) + ny,
        pump_on,
        sample_rate: nyquist_rate(cal.delta_f),
        packet_size,
        seed,
    })
}

/// Sample moments `<X_r^i Y_r^j>` for `1 <= i + j <= 4`, plus the DC values.
pub fn estimate_moments(t: &RawTraceSet) -> Result<MomentSet> {
    t.validate()?;
    let keys = moment_keys();
    let sums = t
        .x
        .par_chunks(CHUNK)
        .zip(t.y.par_chunks(CHUNK))
        .map(|(xs, ys)| {
            let mut acc = [0.0f64; 14];
            for (&x, &y) in xs.iter().zip(ys) {
                let (x2, y2) = (x * x, y * y);
                let terms = [x, y, x2, x * y, y2, x2 * x, x2 * y, x * y2, y2 * y, x2 * x2, x2 * x * y, x2 * y2, x * y2 * y, y2 * y2];
                for (a, v) in acc.iter_mut().zip(terms) {
                    *a += v;
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        // fixed summation order keeps results independent of the thread count
        .fold([0.0; 14], |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        });
    let n = t.packet_size as f64;
    let moments: BTreeMap<(u32, u32), f64> = keys.into_iter().zip(sums).map(|(k, s)| (k, s / n)).collect();
    MomentSet::new(moments, (t.x_dc, t.y_dc), t.packet_size as u64)
}

/// Expected raw moments of a packet: the zero-mean Gaussian AC moments of
/// `d + h^dag` pushed through the mixer, with the noiseless DC values.
pub fn model_moments(truth: &GaussianState, cal: &CalibrationConstants, n_samples: u64) -> Result<MomentSet> {
    let zero = C64::new(0.0, 0.0);
    let mut kappa = [[zero; 5]; 5];
    kappa[1][1] = C64::new(truth.n + cal.n_h, 0.0);
    kappa[0][2] = truth.s;
    kappa[2][0] = truth.s.conj();
    let q = quadrature_moments(&moments_from_cumulants(&kappa));
    let moments = moment_keys().into_iter().map(|(i, j)| ((i, j), q[i as usize][j as usize])).collect();
    let dc = (std::f64::consts::SQRT_2 * truth.alpha.re, std::f64::consts::SQRT_2 * truth.alpha.im);
    distort_moments(&MomentSet::new(moments, dc, n_samples)?, cal)
}

/// Independent per-packet seeds drawn from one master seed.
pub fn packet_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.random()).collect()
}
