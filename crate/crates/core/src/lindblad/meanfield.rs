//! Classical fixed point of the pumped coupled-mode equations.
//!
//! ```text
//! d alpha/dt = i delta_a alpha - i J beta - i eta_a - (G_aa alpha + G_ab beta)/2
//! d beta/dt  = i delta_b beta  - i J alpha + 2 i U |beta|^2 beta - i eta_b - (G_ba alpha + G_bb beta)/2
//! ```
//!
//! with `G` the damping matrix of the loss channels.

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::Serialize;

use super::params::SystemParams;
use crate::error::{Error, Result};
use crate::C64;

pub const MAX_ITERATIONS: usize = 200;
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanField {
    pub alpha: C64,
    pub beta: C64,
    pub iterations: usize,
    /// Residual relative to the pump scale.
    pub residual: f64,
    pub warnings: Vec<String>,
}

fn i() -> C64 {
    C64::new(0.0, 1.0)
}

struct Equations {
    m: [[C64; 2]; 2],
    drive: [C64; 2],
    u: f64,
}

impl Equations {
    fn new(p: &SystemParams) -> Self {
        let g = p.damping_matrix();
        let m = [
            [i() * p.delta_a - 0.5 * g[0][0], -i() * p.j - 0.5 * g[0][1]],
            [-i() * p.j - 0.5 * g[1][0], i() * p.delta_b - 0.5 * g[1][1]],
        ];
        Self { m, drive: [-i() * p.eta_a, -i() * p.eta_b], u: p.u }
    }

    fn residual(&self, z: [C64; 2]) -> [C64; 2] {
        let kerr = 2.0 * i() * self.u * z[1].norm_sqr() * z[1];
        [
            self.m[0][0] * z[0] + self.m[0][1] * z[1] + self.drive[0],
            self.m[1][0] * z[0] + self.m[1][1] * z[1] + kerr + self.drive[1],
        ]
    }

    /// Solution with the Kerr term dropped.
    fn linear(&self) -> Result<[C64; 2]> {
        let m = &self.m;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.norm() == 0.0 {
            return Err(Error::invalid("linear mean-field system is singular (no damping?)"));
        }
        let (r0, r1) = (-self.drive[0], -self.drive[1]);
        Ok([(m[1][1] * r0 - m[0][1] * r1) / det, (m[0][0] * r1 - m[1][0] * r0) / det])
    }

    /// Real 4x4 Jacobian in `(Re alpha, Im alpha, Re beta, Im beta)`.
    fn jacobian(&self, z: [C64; 2]) -> Mat<f64> {
        let mut jac = Mat::<f64>::zeros(4, 4);
        let mut put = |r: usize, c: usize, m: C64, conj: C64| {
            // d(m dz + conj dz*) for dz = dx + i dy
            jac[(2 * r, 2 * c)] += m.re + conj.re;
            jac[(2 * r, 2 * c + 1)] += -m.im + conj.im;
            jac[(2 * r + 1, 2 * c)] += m.im + conj.im;
            jac[(2 * r + 1, 2 * c + 1)] += m.re - conj.re;
        };
        let zero = C64::new(0.0, 0.0);
        put(0, 0, self.m[0][0], zero);
        put(0, 1, self.m[0][1], zero);
        put(1, 0, self.m[1][0], zero);
        let b = z[1];
        let lin = self.m[1][1] + 2.0 * i() * self.u * 2.0 * b.norm_sqr();
        let anti = 2.0 * i() * self.u * b * b;
        put(1, 1, lin, anti);
        jac
    }
}

fn norm(r: [C64; 2]) -> f64 {
    (r[0].norm_sqr() + r[1].norm_sqr()).sqrt()
}

fn newton(eq: &Equations, start: [C64; 2], scale: f64) -> Result<([C64; 2], usize, f64)> {
    let mut z = start;
    let mut r = eq.residual(z);
    let mut rn = norm(r) / scale;
    for it in 0..MAX_ITERATIONS {
        if rn < RESIDUAL_TOL {
            return Ok((z, it, rn));
        }
        let jac = eq.jacobian(z);
        let rhs = Mat::<f64>::from_fn(4, 1, |k, _| {
            let c = r[k / 2];
            -(if k % 2 == 0 { c.re } else { c.im })
        });
        let dx = jac.partial_piv_lu().solve(&rhs);
        if (0..4).any(|k| !dx[(k, 0)].is_finite()) {
            break;
        }
        let step = [C64::new(dx[(0, 0)], dx[(1, 0)]), C64::new(dx[(2, 0)], dx[(3, 0)])];
        let mut t = 1.0;
        loop {
            let trial = [z[0] + t * step[0], z[1] + t * step[1]];
            let tr = eq.residual(trial);
            let tn = norm(tr) / scale;
            if tn < rn || t < 1e-6 {
                z = trial;
                r = tr;
                rn = tn;
                break;
            }
            t *= 0.5;
        }
    }
    if rn < RESIDUAL_TOL {
        return Ok((z, MAX_ITERATIONS, rn));
    }
    Err(Error::MeanFieldNonConvergence { iterations: MAX_ITERATIONS, residual: rn })
}

/// Pump ramp from a tenth of `eta`, each step started from the previous one.
fn continuation(p: &SystemParams, drive_scale: f64) -> Result<([C64; 2], usize, f64)> {
    const STEPS: usize = 20;
    let mut z = [C64::new(0.0, 0.0); 2];
    let mut total = 0;
    let mut last = (z, 0, f64::INFINITY);
    for k in 1..=STEPS {
        let f = k as f64 / STEPS as f64;
        let mut q = p.clone();
        q.eta_a *= f;
        q.eta_b *= f;
        let eq = Equations::new(&q);
        let start = if k == 1 { eq.linear()? } else { z };
        let (next, it, rn) = newton(&eq, start, f * drive_scale)?;
        z = next;
        total += it;
        last = (z, total, rn);
    }
    Ok(last)
}

fn larger_starts(eq: &Equations, lin: [C64; 2], drive_scale: f64) -> Result<([C64; 2], usize, f64)> {
    let mut err = None;
    for factor in [0.0, 3.0, 10.0, 30.0] {
        match newton(eq, [lin[0] * factor, lin[1] * factor * C64::from_polar(1.0, 0.7)], drive_scale) {
            Ok(sol) => return Ok(sol),
            Err(e) => err = Some(e),
        }
    }
    Err(err.expect("at least one start"))
}

/// Damped Newton solve from the linear-response starting point, falling back
/// to a pump ramp and then to larger starting amplitudes.
///
/// Extra starts at larger amplitudes probe for bistability; when they land on
/// distinct fixed points the lowest-amplitude one is returned with a warning.
pub fn mean_field_steady_state(p: &SystemParams) -> Result<MeanField> {
    p.validate()?;
    let zero = C64::new(0.0, 0.0);
    let drive_scale = p.eta_a.norm() + p.eta_b.norm();
    if drive_scale == 0.0 {
        return Ok(MeanField { alpha: zero, beta: zero, iterations: 0, residual: 0.0, warnings: vec![] });
    }
    let eq = Equations::new(p);
    let lin = eq.linear()?;
    let (z, iterations, residual) = match newton(&eq, lin, drive_scale) {
        Ok(sol) => sol,
        Err(e) => continuation(p, drive_scale).or_else(|_| larger_starts(&eq, lin, drive_scale)).map_err(|_| e)?,
    };
    let mut warnings = Vec::new();
    let mut best = z;
    if p.u != 0.0 {
        let amp = |z: [C64; 2]| z[0].norm_sqr() + z[1].norm_sqr();
        for factor in [3.0, 10.0, 30.0] {
            let start = [lin[0] * factor, lin[1] * factor * C64::from_polar(1.0, 0.7)];
            if let Ok((alt, _, _)) = newton(&eq, start, drive_scale) {
                let diff = ((alt[0] - best[0]).norm() + (alt[1] - best[1]).norm()) / (best[0].norm() + best[1].norm()).max(1e-300);
                if diff > 1e-6 {
                    if warnings.is_empty() {
                        warnings.push("mean field is multistable; low-amplitude branch selected".to_string());
                    }
                    if amp(alt) < amp(best) {
                        best = alt;
                    }
                }
            }
        }
    }
    let residual = if best == z { residual } else { norm(eq.residual(best)) / drive_scale };
    Ok(MeanField { alpha: best[0], beta: best[1], iterations, residual, warnings })
}

/// Mean-field residual `(d alpha/dt, d beta/dt)` at a given point.
pub fn mean_field_residual(p: &SystemParams, alpha: C64, beta: C64) -> [C64; 2] {
    Equations::new(p).residual([alpha, beta])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    fn params(u: f64, eta: f64) -> SystemParams {
        SystemParams::two_mode(mhz(-2.0), mhz(-1.0), mhz(25.1), u, C64::new(mhz(eta), 0.0), mhz(10.35), mhz(7.0), 1.4e-3, 0.0)
    }

    #[test]
    fn unpumped_is_zero() {
        let mf = mean_field_steady_state(&params(mhz(0.25), 0.0)).unwrap();
        assert_eq!((mf.alpha, mf.beta), (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    }

    #[test]
    fn linear_case_matches_closed_form() {
        let p = params(0.0, 20.0);
        let mf = mean_field_steady_state(&p).unwrap();
        // Cramer's rule on the 2x2 system written out independently
        let ii = C64::new(0.0, 1.0);
        let a11 = ii * p.delta_a - 0.5 * p.kappa_a();
        let a22 = ii * p.delta_b - 0.5 * p.kappa_b();
        let a12 = -ii * p.j;
        let det = a11 * a22 - a12 * a12;
        let rhs = ii * p.eta_a;
        let alpha = a22 * rhs / det;
        let beta = -a12 * rhs / det;
        assert!((mf.alpha - alpha).norm() / alpha.norm() < 1e-12);
        assert!((mf.beta - beta).norm() / beta.norm() < 1e-12);
    }

    #[test]
    fn kerr_fixed_point_has_small_residual() {
        let p = params(mhz(0.25), 44.0);
        let mf = mean_field_steady_state(&p).unwrap();
        let r = mean_field_residual(&p, mf.alpha, mf.beta);
        assert!(norm(r) / p.eta_a.norm() < 1e-12);
        assert!(mf.residual < 1e-12);
    }

    #[test]
    fn strong_kerr_reports_multistability() {
        // detuning opposite to the Kerr shift, drive inside the hysteresis window
        let mut p = SystemParams::two_mode(mhz(0.0), mhz(-20.0), mhz(0.01), mhz(5.0), C64::new(0.0, 0.0), mhz(1.0), mhz(1.0), 0.0, 0.0);
        p.eta_b = C64::new(mhz(6.0), 0.0);
        let mf = mean_field_steady_state(&p).unwrap();
        let r = mean_field_residual(&p, mf.alpha, mf.beta);
        assert!(norm(r) / p.eta_b.norm() < 1e-12);
        assert!(!mf.warnings.is_empty(), "{mf:?}");
    }
}
