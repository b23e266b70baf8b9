//! Detuning scans, 2D maps, `g2` minimization and `g2(tau)` curves.
//!
//! Every grid point is an independent solve; points run in parallel and are
//! collected by index, so results do not depend on scheduling.

mod envelope;
mod optimize;
mod records;
mod tau;

pub use envelope::{lower_envelope, EnvelopeBin, BINS_PER_DECADE};
pub use optimize::{minimize_g2, nelder_mead, EnvelopePoint, MinimizeOptions, NelderMead};
pub use records::{read_records_csv, records_to_csv, write_records_csv, SweepRecord, RECORD_HEADER};
pub use tau::{dominant_period, g2_tau_curve, TauCurve};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::{mean_field_steady_state, solve_point, SystemParams};
use crate::C64;

/// How `delta_b` follows `delta_a` in a one-dimensional scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DetuningLock {
    /// `delta_b = delta_a`.
    Equal,
    /// `delta_b = delta_a + offset`.
    Offset(f64),
    /// `delta_b` held at the given value.
    Fixed(f64),
}

impl DetuningLock {
    pub fn delta_b(&self, delta_a: f64) -> f64 {
        match *self {
            DetuningLock::Equal => delta_a,
            DetuningLock::Offset(d) => delta_a + d,
            DetuningLock::Fixed(b) => b,
        }
    }
}

/// Solves one point; failures become a record with a status message.
pub fn evaluate_point(p: &SystemParams, cutoffs: (usize, usize)) -> SweepRecord {
    match solve_point(p, cutoffs) {
        Ok(sol) => {
            let o = sol.observables;
            SweepRecord {
                delta_a: p.delta_a,
                delta_b: p.delta_b,
                eta: p.eta_a,
                n_tot: o.n_tot,
                g2: o.g2,
                g2_prime: o.g2_prime,
                alpha: o.alpha,
                n: o.n,
                s: o.s,
                status: SweepRecord::OK.into(),
                warnings: sol.mean_field.warnings,
            }
        }
        Err(e) => SweepRecord::failed(p, &e),
    }
}

fn evaluate_all(points: &[SystemParams], cutoffs: (usize, usize)) -> Vec<SweepRecord> {
    points.par_iter().map(|p| evaluate_point(p, cutoffs)).collect()
}

/// Result of a one-dimensional scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetuningSweep {
    /// Pump amplitude used, after fitting if requested.
    pub eta: C64,
    pub records: Vec<SweepRecord>,
}

/// Mean-field `|alpha|^2` with `delta_b` locked, at `delta_a = 0`.
fn resonant_population(p: &SystemParams, lock: DetuningLock, eta: C64) -> Result<f64> {
    let q = p.clone().with_detunings(0.0, lock.delta_b(0.0)).with_eta(eta);
    Ok(mean_field_steady_state(&q)?.alpha.norm_sqr())
}

/// Scales `eta` so the resonant `|alpha|^2` equals `target`, by secant
/// iteration on `ln |alpha|^2` against `ln |eta|`.
pub fn fit_eta(p: &SystemParams, lock: DetuningLock, target: f64) -> Result<C64> {
    if !(target > 0.0) {
        return Err(Error::invalid(format!("target population must be positive, got {target}")));
    }
    let eta0 = p.eta_a;
    if eta0.norm() == 0.0 {
        return Err(Error::invalid("cannot fit a zero pump amplitude"));
    }
    let phase = eta0 / eta0.norm();
    let resid = |x: f64| -> Result<f64> { Ok(resonant_population(p, lock, phase * x.exp())?.ln() - target.ln()) };
    let (mut x0, mut x1) = (eta0.norm().ln(), eta0.norm().ln() + 0.1);
    let (mut f0, mut f1) = (resid(x0)?, resid(x1)?);
    for _ in 0..60 {
        if f1.abs() < 1e-6 {
            return Ok(phase * x1.exp());
        }
        let slope = (f1 - f0) / (x1 - x0);
        if !slope.is_finite() || slope == 0.0 {
            break;
        }
        // bounded steps keep the iteration away from bistable jumps
        let step = (-f1 / slope).clamp(-2.0, 2.0);
        (x0, f0) = (x1, f1);
        x1 += step;
        f1 = resid(x1)?;
    }
    Err(Error::invalid(format!("pump fit did not reach |alpha|^2 = {target:e}")))
}

/// One record per `delta_a`, with `delta_b` following `lock`.
pub fn sweep_detuning(
    p: &SystemParams,
    delta_a_grid: &[f64],
    lock: DetuningLock,
    eta_fit_target: Option<f64>,
    cutoffs: (usize, usize),
) -> Result<DetuningSweep> {
    p.validate()?;
    let eta = match eta_fit_target {
        Some(t) => fit_eta(p, lock, t)?,
        None => p.eta_a,
    };
    let points: Vec<SystemParams> = delta_a_grid.iter().map(|&da| p.clone().with_detunings(da, lock.delta_b(da)).with_eta(eta)).collect();
    Ok(DetuningSweep { eta, records: evaluate_all(&points, cutoffs) })
}

/// Records over the outer product of `delta_a` and `delta_b - delta_a`,
/// indexed `[i_a][i_diff]`.
pub fn map2d(p: &SystemParams, delta_a_grid: &[f64], delta_diff_grid: &[f64], cutoffs: (usize, usize)) -> Result<Vec<Vec<SweepRecord>>> {
    p.validate()?;
    let points: Vec<SystemParams> = delta_a_grid
        .iter()
        .flat_map(|&da| delta_diff_grid.iter().map(move |&dd| (da, dd)))
        .map(|(da, dd)| p.clone().with_detunings(da, da + dd))
        .collect();
    let flat = evaluate_all(&points, cutoffs);
    let width = delta_diff_grid.len();
    if width == 0 {
        return Ok(vec![Vec::new(); delta_a_grid.len()]);
    }
    Ok(flat.chunks(width).map(|c| c.to_vec()).collect())
}

/// `sqrt(gamma_1 P / (hbar omega_p))`: pump amplitude for power `p_watts`
/// incident on a port of rate `gamma_port`.
pub fn eta_from_power(p_watts: f64, gamma_port: f64, omega_p: f64) -> Result<f64> {
    if !(p_watts >= 0.0 && gamma_port >= 0.0 && omega_p > 0.0) {
        return Err(Error::invalid("pump power, port rate and frequency must be non-negative"));
    }
    Ok((gamma_port * p_watts / (crate::units::HBAR * omega_p)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    fn sample(eta: f64) -> SystemParams {
        SystemParams::two_mode(0.0, 0.0, mhz(25.1), mhz(0.25), C64::new(mhz(eta), 0.0), mhz(10.35), mhz(7.0), 1.4e-3, 0.0)
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| mhz(lo + (hi - lo) * k as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn weak_pump_is_thermal() {
        let s = sweep_detuning(&sample(1e-4), &grid(-20.0, 20.0, 9), DetuningLock::Equal, None, (4, 4)).unwrap();
        for r in &s.records {
            assert!(r.is_ok(), "{}", r.status);
            assert!((r.g2 - 2.0).abs() < 1e-2, "{}", r.g2);
            assert!((r.n_tot - r.alpha.norm_sqr() - r.n).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_system_never_antibunches() {
        let p = sample(30.0).with_kerr(0.0);
        let s = sweep_detuning(&p, &grid(-30.0, 30.0, 25), DetuningLock::Equal, None, (4, 4)).unwrap();
        assert!(s.records.iter().all(|r| r.g2 >= 1.0 - 1e-6));
    }

    #[test]
    fn fitted_pump_hits_target() {
        let target = 2e-3;
        let s = sweep_detuning(&sample(5.0), &[0.0], DetuningLock::Equal, Some(target), (4, 4)).unwrap();
        assert!((s.records[0].alpha.norm_sqr() / target - 1.0).abs() < 0.01);
    }

    #[test]
    fn map_structure() {
        let p = sample(20.0);
        let a = grid(-5.0, 5.0, 3);
        let d = grid(-2.0, 2.0, 2);
        let m = map2d(&p, &a, &d, (4, 4)).unwrap();
        assert_eq!((m.len(), m[0].len()), (3, 2));
        // reversed grids give the same records, reversed
        let ra: Vec<f64> = a.iter().rev().copied().collect();
        let rd: Vec<f64> = d.iter().rev().copied().collect();
        let r = map2d(&p, &ra, &rd, (4, 4)).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(m[i][j], r[2 - i][1 - j]);
            }
        }
        let single = map2d(&p, &a[..1], &[0.0], (4, 4)).unwrap();
        let line = sweep_detuning(&p.clone(), &a[..1], DetuningLock::Equal, None, (4, 4)).unwrap();
        assert_eq!(single[0][0], line.records[0]);
        assert_eq!(map2d(&p, &a, &[], (4, 4)).unwrap().len(), 3);
    }

    #[test]
    fn failures_are_recorded() {
        let p = sample(20.0);
        let r = evaluate_point(&p, (40, 40));
        assert!(!r.is_ok() && r.g2.is_nan());
    }

    #[test]
    fn eta_at_reference_power() {
        let eta = eta_from_power(crate::units::dbm_to_watts(-101.0), mhz(0.59), crate::units::ghz(5.878)).unwrap();
        assert!((eta / mhz(1.0) - 43.76).abs() < 0.05, "{}", eta / mhz(1.0));
    }
}
