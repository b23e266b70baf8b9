//! Minimal `g2(0)` over the two detunings at fixed pump amplitude.

use rayon::prelude::*;
use serde::Serialize;

use super::evaluate_point;
use crate::error::{Error, Result};
use crate::lindblad::{SystemParams, DEFAULT_CUTOFF};
use crate::C64;

/// Objective value assigned outside the search box or on failed solves.
const PENALTY: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NelderMead {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimization from `x0` with initial edge `step`.
///
/// Stops when both the spread of simplex values is below `f_tol` and the
/// simplex diameter is below `x_tol`, or after `max_iter` iterations.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, f_tol: f64, x_tol: f64, max_iter: usize) -> NelderMead {
    let dim = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for k in 0..dim {
        let mut x = x0.to_vec();
        x[k] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let lerp = |a: &[f64], b: &[f64], t: f64| a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect::<Vec<f64>>();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[dim].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= f_tol && diameter <= x_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..dim).map(|k| simplex[..dim].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64).collect();
        let worst = simplex[dim].clone();
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = eval(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let (t, ref_f) = if fr < worst.1 { (-0.5, fr) } else { (0.5, worst.1) };
            let contracted = lerp(&centroid, &worst.0, t);
            let fc = eval(&contracted);
            if fc < ref_f {
                simplex[dim] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &entry.0, 0.5);
                    let v = eval(&x);
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    NelderMead { x, f, iterations, evaluations, converged }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizeOptions {
    /// Points per axis of the seeding grid.
    pub grid_points: usize,
    /// Half-width of the seeding grid around the center (rad/s).
    pub grid_half_width: f64,
    /// Half-width of the search box; the objective is penalized outside.
    pub box_half_width: f64,
    /// Center `(delta_a, delta_b)` of grid and box (rad/s).
    pub center: (f64, f64),
    /// Tolerance on `g2`.
    pub g2_tol: f64,
    /// Tolerance on the detunings (rad/s).
    pub detuning_tol: f64,
    pub max_iter: usize,
    pub cutoffs: (usize, usize),
}

impl MinimizeOptions {
    /// 11 x 11 grid over `+- kappa_a`, box `+- 2 kappa_a`.
    pub fn for_params(p: &SystemParams) -> Self {
        let k = p.kappa_a();
        Self {
            grid_points: 11,
            grid_half_width: k,
            box_half_width: 2.0 * k,
            center: (0.0, 0.0),
            g2_tol: 1e-4,
            detuning_tol: 1e-4 * k,
            max_iter: 400,
            cutoffs: (DEFAULT_CUTOFF, DEFAULT_CUTOFF),
        }
    }
}

/// Minimum of `g2(0)` over the detunings at one pump amplitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub eta: C64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub n_tot: f64,
    pub g2_min: f64,
    pub g2_prime: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

fn minimize_one(p: &SystemParams, eta: C64, o: &MinimizeOptions) -> Result<EnvelopePoint> {
    let base = p.clone().with_eta(eta);
    let scale = o.grid_half_width;
    // optimize in units of the grid half-width
    let objective = |x: &[f64]| {
        if x.iter().any(|v| (v * scale).abs() > o.box_half_width) {
            return PENALTY;
        }
        let q = base.clone().with_detunings(o.center.0 + x[0] * scale, o.center.1 + x[1] * scale);
        let r = evaluate_point(&q, o.cutoffs);
        if r.is_ok() {
            r.g2
        } else {
            PENALTY
        }
    };
    let n = o.grid_points.max(1);
    let axis: Vec<f64> = (0..n).map(|k| if n == 1 { 0.0 } else { -1.0 + 2.0 * k as f64 / (n - 1) as f64 }).collect();
    let mut seed = (PENALTY, 0.0, 0.0);
    for &a in &axis {
        for &b in &axis {
            let v = objective(&[a, b]);
            if v < seed.0 {
                seed = (v, a, b);
            }
        }
    }
    let step = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.1 };
    let nm = nelder_mead(objective, &[seed.1, seed.2], step, o.g2_tol, o.detuning_tol / scale, o.max_iter);
    let (da, db) = (o.center.0 + nm.x[0] * scale, o.center.1 + nm.x[1] * scale);
    let best = evaluate_point(&base.clone().with_detunings(da, db), o.cutoffs);
    if !best.is_ok() {
        return Err(Error::invalid(format!("no valid point found for eta = {eta}: {}", best.status)));
    }
    let mut warnings = best.warnings.clone();
    if !nm.converged {
        warnings.push(format!("optimizer stopped after {} iterations; best value reported", nm.iterations));
    }
    Ok(EnvelopePoint {
        eta,
        delta_a: da,
        delta_b: db,
        n_tot: best.n_tot,
        g2_min: best.g2,
        g2_prime: best.g2_prime,
        evaluations: nm.evaluations + n * n,
        converged: nm.converged,
        warnings,
    })
}

/// Per pump amplitude, a grid-seeded Nelder-Mead search over
/// `(delta_a, delta_b)`.
pub fn minimize_g2(p: &SystemParams, eta_values: &[C64], opts: &MinimizeOptions) -> Result<Vec<EnvelopePoint>> {
    if eta_values.is_empty() {
        return Err(Error::invalid("no pump amplitudes given"));
    }
    p.validate()?;
    eta_values.par_iter().map(|&eta| minimize_one(p, eta, opts)).collect()
}
