//! Command implementations behind the `upb` binary.
//!
//! Each command reads a [`RunConfig`], writes its data files atomically into
//! the output directory and always finishes with a `<command>.manifest.json`
//! holding the configuration, grids, seed and toolkit version. Data files are
//! deterministic; only the manifest timestamp changes between runs.

mod demo;

pub use demo::{cmd_measure_demo, DemoReport, DemoResult, StateSummary};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{MatchNorm, RunConfig};
use crate::device::{coupled_mode_frequencies, hybridized_thermal_population, PortCoupling};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::lindblad::{solve_point, SystemParams};
use crate::sweep::{dominant_period, g2_tau_curve, map2d, minimize_g2, sweep_detuning, write_records_csv, SweepRecord, TauCurve};
use crate::C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Header of the flux-sweep CSV; frequencies are ordinary, in Hz.
pub const FLUX_HEADER: [&str; 5] = ["flux_ratio", "omega_b_Hz", "lower_mode_Hz", "upper_mode_Hz", "splitting_Hz"];
/// Header of the `g2(tau)` CSV.
pub const TAU_HEADER: [&str; 7] = ["delta_a_rad_s", "delta_b_rad_s", "tau_s", "g2", "g2_regression", "status", "warnings"];
/// Header of the envelope CSV.
pub const ENVELOPE_HEADER: [&str; 11] = [
    "eta_re_rad_s",
    "eta_im_rad_s",
    "delta_a_rad_s",
    "delta_b_rad_s",
    "n_tot",
    "g2_min",
    "g2_prime",
    "evaluations",
    "converged",
    "status",
    "warnings",
];

/// Lowest frequency (Hz) considered when extracting the `g2(tau)` period.
const MIN_OSCILLATION_HZ: f64 = 5e6;

/// Settings that come from the command line rather than the file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; the configured one when absent.
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub packet_size: Option<usize>,
}

impl RunOptions {
    fn dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory))
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    pub points: usize,
    pub failed: usize,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    created_unix_s: u64,
    seed: Option<u64>,
    config: &'a RunConfig,
    system: Option<&'a SystemParams>,
    grids: Value,
    summary: Value,
    files: Vec<String>,
    points: usize,
    failed: usize,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn write_csv<const N: usize>(path: &Path, header: [&str; N], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

struct Finish<'a> {
    command: &'a str,
    seed: Option<u64>,
    system: Option<&'a SystemParams>,
    grids: Value,
    summary: Value,
}

/// Writes the manifest and turns a run where every point failed into an error.
fn finish(cfg: &RunConfig, dir: &Path, f: Finish, mut files: Vec<PathBuf>, points: usize, failed: usize, warnings: Vec<String>) -> Result<CommandOutcome> {
    let manifest_path = dir.join(format!("{}.manifest.json", f.command));
    let created = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    files.push(manifest_path.clone());
    let m = Manifest {
        command: f.command,
        version: VERSION,
        created_unix_s: created,
        seed: f.seed,
        config: cfg,
        system: f.system,
        grids: f.grids,
        summary: f.summary,
        files: files.iter().map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned()).collect(),
        points,
        failed,
    };
    write_json(&manifest_path, &m)?;
    if points > 0 && failed == points {
        return Err(Error::Pipeline(format!("{}: all {points} points failed", f.command)));
    }
    Ok(CommandOutcome { files, points, failed, warnings })
}

fn hz(omega: f64) -> f64 {
    omega / std::f64::consts::TAU
}

fn rates_json(rates: &[PortCoupling; 4]) -> Value {
    json!(rates.iter().map(|r| json!({"rate_rad_s": r.rate, "alpha": r.alpha, "beta": r.beta})).collect::<Vec<_>>())
}

/// Derived circuit and bath parameters (`device.json`) and the flux
/// dependence of the two coupled modes (`flux_sweep.csv`).
pub fn cmd_device(cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutcome> {
    let dir = opts.dir(cfg);
    let circuit = cfg.circuit()?;
    let cm = cfg.coupling()?;
    let full = cm.port_rates();
    let simple = cm.simplified().port_rates();
    let populations = cfg.port_populations()?;
    let (n_th_a, n_th_b) = cfg.mode_populations()?;
    let s = &cfg.system;
    let d = &cfg.device;
    let kappa_mean = 0.5 * (s.kappa_a.value + s.kappa_b.value);
    let n_th_estimate = hybridized_thermal_population(0.0, kappa_mean, s.j.value, n_th_a, n_th_b)?;

    // pump-off population of mode a at resonance from the master equation
    let mut n_th_me = Vec::new();
    let base = cfg.system_params()?;
    for kb in [s.kappa_b_range[0].value, s.kappa_b.value, s.kappa_b_range[1].value] {
        let p = SystemParams::two_mode(0.0, 0.0, s.j.value, s.u.value, C64::new(0.0, 0.0), s.kappa_a.value, kb, base.n_th_a(), base.n_th_b());
        let n = solve_point(&p, cfg.cutoffs())?.observables.n;
        n_th_me.push(json!({"kappa_b_rad_s": kb, "n_th": n}));
    }

    let j = s.j.value;
    let fs = &d.flux_sweep;
    let fluxes: Vec<f64> = match fs.points {
        0 => Vec::new(),
        1 => vec![fs.start],
        n => (0..n).map(|k| fs.start + (fs.stop - fs.start) * k as f64 / (n - 1) as f64).collect(),
    };
    let mut rows = Vec::with_capacity(fluxes.len());
    let mut min_split = f64::INFINITY;
    for &phi in &fluxes {
        let wb = circuit.omega_b_at(phi)?;
        let (lo, hi) = coupled_mode_frequencies(d.omega_a.value, wb, j);
        min_split = min_split.min(hi - lo);
        rows.push(vec![num(phi), num(hz(wb)), num(hz(lo)), num(hz(hi)), num(hz(hi - lo))]);
    }
    let flux_path = dir.join("flux_sweep.csv");
    write_csv(&flux_path, FLUX_HEADER, &rows)?;

    let derived = json!({
        "circuit": circuit,
        "squid_inductance_operating_H": circuit.squid_inductance()?,
        "omega_b_rad_s": circuit.omega_b()?,
        "kerr_u_rad_s": circuit.kerr()?,
        "port_rates_full": rates_json(&full),
        "port_rates_simplified": rates_json(&simple),
        "kappa_a_from_ports_rad_s": simple[0].rate + simple[1].rate + d.gamma_a.value,
        "kappa_b_from_ports_rad_s": simple[2].rate + simple[3].rate + d.gamma_b.value,
        "port_populations": populations,
        "n_th_a": n_th_a,
        "n_th_b": n_th_b,
        "n_th_resonant_estimate": n_th_estimate,
        "n_th_resonant_estimate_kappa_rad_s": kappa_mean,
        "n_th_resonant_master_equation": n_th_me,
        "min_splitting_rad_s": if min_split.is_finite() { Some(min_split) } else { None },
        "coupling_j_rad_s": j,
    });
    let json_path = dir.join("device.json");
    write_json(&json_path, &derived)?;
    let f = Finish { command: "device", seed: None, system: Some(&base), grids: json!({"flux_ratio": fluxes}), summary: derived };
    finish(cfg, &dir, f, vec![json_path, flux_path], 0, 0, Vec::new())
}

fn count_failed(records: &[SweepRecord]) -> usize {
    records.iter().filter(|r| !r.is_ok()).count()
}

/// `g2(0)`, `alpha`, `n`, `s` against `delta_a` (`g2_sweep.csv`).
pub fn cmd_g2_sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutcome> {
    let dir = opts.dir(cfg);
    let c = &cfg.g2_sweep;
    let p = cfg.system_params()?.with_eta(cfg.eta_for_power(c.power.value)?);
    let grid = c.delta_a.values();
    let lock = cfg.g2_sweep_lock();
    let sweep = sweep_detuning(&p, &grid, lock, c.fit_population, cfg.cutoffs())?;
    let path = dir.join("g2_sweep.csv");
    write_records_csv(&path, &sweep.records)?;
    let failed = count_failed(&sweep.records);
    let p = p.with_eta(sweep.eta);
    let f = Finish {
        command: "g2-sweep",
        seed: None,
        system: Some(&p),
        grids: json!({"delta_a_rad_s": grid, "lock": lock}),
        summary: json!({"eta_rad_s": [sweep.eta.re, sweep.eta.im]}),
    };
    finish(cfg, &dir, f, vec![path], grid.len(), failed, Vec::new())
}

/// Features of one `g2(tau)` curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSummary {
    pub delta_a: f64,
    pub delta_b: f64,
    pub g2_zero: f64,
    pub period_s: Option<f64>,
    /// `g2(0) < 1`.
    pub violates_g2_ge_1: bool,
    /// `g2(0) < g2(tau)` for some delay.
    pub violates_g2_ge_g2_tau: bool,
    pub status: String,
}

fn summarize_curve(c: &TauCurve, dt: f64) -> TauSummary {
    let g0 = c.g2[0];
    TauSummary {
        delta_a: c.delta_a,
        delta_b: c.delta_b,
        g2_zero: g0,
        period_s: dominant_period(&c.g2, dt, MIN_OSCILLATION_HZ).ok(),
        violates_g2_ge_1: g0 < 1.0,
        violates_g2_ge_g2_tau: c.g2[1..].iter().any(|&g| g > g0),
        status: SweepRecord::OK.into(),
    }
}

/// `g2(tau)` at each configured detuning (`g2_tau.csv`, long format).
pub fn cmd_g2_tau(cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutcome> {
    let dir = opts.dir(cfg);
    let c = &cfg.g2_tau;
    let p = cfg.system_params()?.with_eta(cfg.eta_for_power(c.power.value)?);
    let tau = cfg.tau_grid();
    let detunings: Vec<(f64, f64)> = c.delta_a.iter().map(|d| (d.value, d.value + c.delta_b_offset.value)).collect();
    let curves: Vec<std::result::Result<TauCurve, Error>> =
        detunings.par_iter().map(|&(da, db)| g2_tau_curve(&p.clone().with_detunings(da, db), &tau, cfg.cutoffs())).collect();

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut failed = 0;
    for (&(da, db), curve) in detunings.iter().zip(&curves) {
        match curve {
            Ok(cv) => {
                let warn = if cv.ordering_discrepancy > 1e-6 { format!("ordering discrepancy {:e}", cv.ordering_discrepancy) } else { String::new() };
                for (k, &t) in tau.iter().enumerate() {
                    rows.push(vec![num(da), num(db), num(t), num(cv.g2[k]), num(cv.g2_regression[k]), SweepRecord::OK.into(), warn.clone()]);
                }
                summaries.push(summarize_curve(cv, c.tau_step.value));
            }
            Err(e) => {
                failed += 1;
                let nan = num(f64::NAN);
                rows.push(vec![num(da), num(db), nan.clone(), nan.clone(), nan, e.to_string(), String::new()]);
                summaries.push(TauSummary {
                    delta_a: da,
                    delta_b: db,
                    g2_zero: f64::NAN,
                    period_s: None,
                    violates_g2_ge_1: false,
                    violates_g2_ge_g2_tau: false,
                    status: e.to_string(),
                });
            }
        }
    }
    let path = dir.join("g2_tau.csv");
    write_csv(&path, TAU_HEADER, &rows)?;
    let f = Finish {
        command: "g2-tau",
        seed: None,
        system: Some(&p),
        grids: json!({"tau_s": tau, "detunings_rad_s": detunings}),
        summary: json!({"curves": summaries}),
    };
    finish(cfg, &dir, f, vec![path], detunings.len(), failed, Vec::new())
}

fn map_population(records: &[Vec<SweepRecord>], norm: MatchNorm) -> f64 {
    let ok: Vec<f64> = records.iter().flatten().filter(|r| r.is_ok()).map(|r| r.n_tot).collect();
    match norm {
        MatchNorm::Peak => ok.iter().copied().fold(f64::NAN, f64::max),
        MatchNorm::Mean => ok.iter().sum::<f64>() / ok.len() as f64,
    }
}

/// Scales `eta` so the map population matches `target`, by secant iteration
/// on `ln n_tot` against `ln eta`.
fn match_map_population(p: &SystemParams, a: &[f64], d: &[f64], cutoffs: (usize, usize), target: f64, norm: MatchNorm) -> Result<C64> {
    let phase = p.eta_a / p.eta_a.norm();
    let resid = |x: f64| -> Result<f64> {
        let m = map2d(&p.clone().with_eta(phase * x.exp()), a, d, cutoffs)?;
        let v = map_population(&m, norm);
        if !(v > 0.0) {
            return Err(Error::Pipeline("no valid map point while matching the population".into()));
        }
        Ok(v.ln() - target.ln())
    };
    let (mut x0, mut x1) = (p.eta_a.norm().ln(), p.eta_a.norm().ln() + 0.1);
    let (mut f0, mut f1) = (resid(x0)?, resid(x1)?);
    for _ in 0..40 {
        if f1.abs() < 1e-4 {
            return Ok(phase * x1.exp());
        }
        let slope = (f1 - f0) / (x1 - x0);
        if !slope.is_finite() || slope == 0.0 {
            break;
        }
        let step = (-f1 / slope).clamp(-2.0, 2.0);
        (x0, f0) = (x1, f1);
        x1 += step;
        f1 = resid(x1)?;
    }
    Err(Error::Pipeline(format!("pump matching did not reach n_tot = {target:e}")))
}

/// `g2(0)` and `n_tot` over `(delta_a, delta_b - delta_a)` (`map.csv`,
/// rows ordered by `delta_a` then `delta_b - delta_a`).
pub fn cmd_map(cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutcome> {
    let dir = opts.dir(cfg);
    let c = &cfg.map;
    let mut p = cfg.system_params()?.with_eta(cfg.eta_for_power(c.power.value)?);
    let (a, d) = (c.delta_a.values(), c.delta_diff.values());
    if let Some(target) = c.match_population {
        if !a.is_empty() && !d.is_empty() {
            let eta = match_map_population(&p, &a, &d, cfg.cutoffs(), target, c.match_norm)?;
            p = p.with_eta(eta);
        }
    }
    let map = map2d(&p, &a, &d, cfg.cutoffs())?;
    let records: Vec<SweepRecord> = map.into_iter().flatten().collect();
    let path = dir.join("map.csv");
    write_records_csv(&path, &records)?;
    let failed = count_failed(&records);
    let f = Finish {
        command: "map",
        seed: None,
        system: Some(&p),
        grids: json!({"delta_a_rad_s": a, "delta_diff_rad_s": d}),
        summary: json!({"eta_rad_s": [p.eta_a.re, p.eta_a.im]}),
    };
    finish(cfg, &dir, f, vec![path], records.len(), failed, Vec::new())
}

/// Minimal `g2(0)` over the detunings for each configured pump amplitude
/// (`envelope.csv`).
pub fn cmd_envelope(cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutcome> {
    let dir = opts.dir(cfg);
    let p = cfg.system_params()?;
    let o = cfg.minimize_options(&p);
    let etas: Vec<C64> = cfg.envelope.eta.iter().map(|e| C64::new(e.value, 0.0)).collect();
    let results: Vec<Result<_>> = etas.par_iter().map(|&eta| minimize_g2(&p, &[eta], &o).map(|mut v| v.remove(0))).collect();
    let mut rows = Vec::new();
    let mut failed = 0;
    for (eta, r) in etas.iter().zip(&results) {
        match r {
            Ok(e) => rows.push(vec![
                num(e.eta.re),
                num(e.eta.im),
                num(e.delta_a),
                num(e.delta_b),
                num(e.n_tot),
                num(e.g2_min),
                num(e.g2_prime),
                e.evaluations.to_string(),
                e.converged.to_string(),
                SweepRecord::OK.into(),
                e.warnings.join("; "),
            ]),
            Err(err) => {
                failed += 1;
                let nan = num(f64::NAN);
                let mut row = vec![num(eta.re), num(eta.im)];
                row.extend(std::iter::repeat_n(nan, 5));
                row.extend(["0".into(), "false".into(), err.to_string(), String::new()]);
                rows.push(row);
            }
        }
    }
    let path = dir.join("envelope.csv");
    write_csv(&path, ENVELOPE_HEADER, &rows)?;
    let f = Finish {
        command: "envelope",
        seed: None,
        system: Some(&p),
        grids: json!({"eta_rad_s": etas.iter().map(|e| e.re).collect::<Vec<_>>(), "options": o}),
        summary: Value::Null,
    };
    finish(cfg, &dir, f, vec![path], etas.len(), failed, Vec::new())
}

/// Names accepted by [`run_command`].
pub const COMMANDS: [&str; 6] = ["device", "g2-sweep", "g2-tau", "map", "envelope", "measure-demo"];

pub fn run_command(name: &str, cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutcome> {
    match name {
        "device" => cmd_device(cfg, opts),
        "g2-sweep" => cmd_g2_sweep(cfg, opts),
        "g2-tau" => cmd_g2_tau(cfg, opts),
        "map" => cmd_map(cfg, opts),
        "envelope" => cmd_envelope(cfg, opts),
        "measure-demo" => cmd_measure_demo(cfg, opts),
        other => Err(Error::Config(format!("unknown command {other:?}"))),
    }
}
