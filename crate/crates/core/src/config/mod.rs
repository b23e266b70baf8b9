//! Run configuration in TOML with explicit units.
//!
//! Every dimensioned value is a string `"<number> <unit>"`; bare numbers are
//! accepted only for dimensionless values (occupations, coupling matrix
//! entries, gains, counts). Sections missing from a user file are taken from
//! the built-in defaults, see [`DEFAULT_CONFIG`].

mod quantity;

pub use quantity::{parse_quantity, Angular, Capacitance, Decibel, Dimension, Frequency, Inductance, Power, Quantity, Temperature, Time};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::device::{capacitance_for_frequency, flux_for_squid_inductance, AttenuatorStage, CircuitParams, CouplingMatrix, ThermalChain};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::lindblad::SystemParams;
use crate::measurement::CalibrationConstants;
use crate::sweep::{eta_from_power, DetuningLock, MinimizeOptions};
use crate::units::db_to_power_factor;
use crate::C64;

/// Built-in configuration describing the measured sample.
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.toml");

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub attenuation: Quantity<Decibel>,
    pub temperature: Quantity<Temperature>,
}

/// Thermal chain feeding one port: a black-body source at `source_temperature`
/// or a given `source_population`, then attenuators in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortChainConfig {
    pub source_temperature: Option<Quantity<Temperature>>,
    pub source_population: Option<f64>,
    #[serde(default)]
    pub stages: Vec<StageConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSweepConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub inductance: Quantity<Inductance>,
    pub squid_inductance_zero_flux: Quantity<Inductance>,
    /// SQUID inductance at the working point.
    pub squid_inductance_operating: Quantity<Inductance>,
    pub omega_a: Quantity<Angular>,
    /// Derived from `omega_a` at the working point when absent.
    pub capacitance: Option<Quantity<Capacitance>>,
    pub omega_0: Quantity<Angular>,
    /// Rows: modes a, b; columns: ports 1 to 4.
    pub coupling_matrix: [[f64; 4]; 2],
    pub gamma_a: Quantity<Angular>,
    pub gamma_b: Quantity<Angular>,
    #[serde(default)]
    pub n_box: f64,
    /// One chain per port.
    pub ports: Vec<PortChainConfig>,
    pub flux_sweep: FluxSweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub j: Quantity<Angular>,
    pub u: Quantity<Angular>,
    pub kappa_a: Quantity<Angular>,
    pub kappa_b: Quantity<Angular>,
    /// Range of `kappa_b` compatible with the spectroscopy.
    pub kappa_b_range: [Quantity<Angular>; 2],
    /// Derived from the port chains when absent.
    pub n_th_a: Option<f64>,
    pub n_th_b: Option<f64>,
    /// Fock cutoff per mode in the displaced frame.
    pub cutoff: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    /// Loss between the quoted power and the sample input.
    pub line_attenuation: Quantity<Decibel>,
    /// Pump frequency used in the photon-flux conversion; `omega_a` if absent.
    pub omega_p: Option<Quantity<Angular>>,
    /// Overrides the power conversion in every command.
    pub eta: Option<Quantity<Angular>>,
}

/// Uniform grid; `points = 0` is an empty grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: Quantity<Angular>,
    pub stop: Quantity<Angular>,
    pub points: usize,
}

impl GridConfig {
    pub fn values(&self) -> Vec<f64> {
        let (a, b, n) = (self.start.value, self.stop.value, self.points);
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2SweepConfig {
    pub power: Quantity<Power>,
    pub delta_a: GridConfig,
    /// `delta_b - delta_a`, held fixed.
    pub delta_b_offset: Option<Quantity<Angular>>,
    /// `delta_b` held at this value instead.
    pub delta_b_fixed: Option<Quantity<Angular>>,
    /// Rescale the pump so the resonant `|alpha|^2` matches this value.
    pub fit_population: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2TauConfig {
    pub power: Quantity<Power>,
    pub delta_a: Vec<Quantity<Angular>>,
    pub delta_b_offset: Quantity<Angular>,
    pub tau_max: Quantity<Time>,
    pub tau_step: Quantity<Time>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchNorm {
    Peak,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub power: Quantity<Power>,
    pub delta_a: GridConfig,
    /// Grid of `delta_b - delta_a`.
    pub delta_diff: GridConfig,
    /// Rescale the pump so the map population matches this value.
    pub match_population: Option<f64>,
    pub match_norm: MatchNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub eta: Vec<Quantity<Angular>>,
    pub grid_points: usize,
    /// Defaults to `kappa_a`.
    pub grid_half_width: Option<Quantity<Angular>>,
    /// Defaults to twice the grid half-width.
    pub box_half_width: Option<Quantity<Angular>>,
    pub g2_tol: f64,
    pub max_iter: usize,
}

/// One synthetic truth state; `alpha` and `s` as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    pub alpha: [f64; 2],
    #[serde(default)]
    pub n: f64,
    #[serde(default)]
    pub s: [f64; 2],
}

impl TruthConfig {
    pub fn state(&self) -> Result<GaussianState> {
        GaussianState::new(C64::new(self.alpha[0], self.alpha[1]), self.n, C64::new(self.s[0], self.s[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub g_x: f64,
    pub g_y: f64,
    pub epsilon: f64,
    pub n_h: f64,
    pub bandwidth: Quantity<Frequency>,
    pub n_th: f64,
    pub packet_size: usize,
    pub packets: usize,
    pub seed: u64,
    pub truth: Vec<TruthConfig>,
}

impl MeasurementConfig {
    pub fn chain(&self) -> Result<CalibrationConstants> {
        CalibrationConstants::new(self.g_x, self.g_y, self.epsilon, self.n_h, self.bandwidth.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceConfig,
    pub system: SystemConfig,
    pub pump: PumpConfig,
    pub g2_sweep: G2SweepConfig,
    pub g2_tau: G2TauConfig,
    pub map: MapConfig,
    pub envelope: EnvelopeConfig,
    pub measurement: MeasurementConfig,
    pub output: OutputConfig,
}

/// A file as written: any section may be missing.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    device: Option<DeviceConfig>,
    system: Option<SystemConfig>,
    pump: Option<PumpConfig>,
    g2_sweep: Option<G2SweepConfig>,
    g2_tau: Option<G2TauConfig>,
    map: Option<MapConfig>,
    envelope: Option<EnvelopeConfig>,
    measurement: Option<MeasurementConfig>,
    output: Option<OutputConfig>,
}

fn pick<T>(name: &str, section: Option<T>, fallback: Option<T>) -> Result<T> {
    section.or(fallback).ok_or_else(|| config_err(format!("missing section [{name}]")))
}

fn parse_partial(text: &str, origin: &str) -> Result<PartialConfig> {
    // the toml error already carries line, column and a source excerpt
    toml::from_str(text).map_err(|e| config_err(format!("{origin}: {e}")))
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG).expect("built-in configuration is valid")
    }
}

impl RunConfig {
    /// Parses `text`, filling missing sections from the defaults, and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::parse_named(text, "configuration")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_named(&text, &path.display().to_string())
    }

    fn parse_named(text: &str, origin: &str) -> Result<Self> {
        let user = parse_partial(text, origin)?;
        let d = parse_partial(DEFAULT_CONFIG, "built-in configuration")?;
        let cfg = RunConfig {
            device: pick("device", user.device, d.device)?,
            system: pick("system", user.system, d.system)?,
            pump: pick("pump", user.pump, d.pump)?,
            g2_sweep: pick("g2_sweep", user.g2_sweep, d.g2_sweep)?,
            g2_tau: pick("g2_tau", user.g2_tau, d.g2_tau)?,
            map: pick("map", user.map, d.map)?,
            envelope: pick("envelope", user.envelope, d.envelope)?,
            measurement: pick("measurement", user.measurement, d.measurement)?,
            output: pick("output", user.output, d.output)?,
        };
        cfg.validate().map_err(|e| match e {
            Error::Config(m) => config_err(format!("{origin}: {m}")),
            other => config_err(format!("{origin}: {other}")),
        })?;
        Ok(cfg)
    }

    /// Range and consistency checks that do not depend on a command.
    pub fn validate(&self) -> Result<()> {
        let dev = &self.device;
        if dev.ports.len() != 4 {
            return Err(config_err(format!("[device] needs 4 [[device.ports]] entries, got {}", dev.ports.len())));
        }
        for (k, p) in dev.ports.iter().enumerate() {
            if p.source_temperature.is_some() == p.source_population.is_some() {
                return Err(config_err(format!("port {}: give exactly one of source_temperature and source_population", k + 1)));
            }
        }
        self.circuit()?;
        self.port_populations()?;
        CouplingMatrix::new(dev.coupling_matrix, dev.omega_0.value)?;
        let s = &self.system;
        for (name, v) in [("j", s.j.value), ("kappa_a", s.kappa_a.value), ("kappa_b", s.kappa_b.value)] {
            if !(v > 0.0) {
                return Err(config_err(format!("[system] {name} must be positive")));
            }
        }
        if !(s.u.value >= 0.0) {
            return Err(config_err("[system] u must be non-negative"));
        }
        if s.cutoff < 2 {
            return Err(config_err("[system] cutoff must be at least 2"));
        }
        for (name, v) in [("n_th_a", s.n_th_a), ("n_th_b", s.n_th_b)] {
            if v.is_some_and(|x| !(x >= 0.0)) {
                return Err(config_err(format!("[system] {name} must be non-negative")));
            }
        }
        let sw = &self.g2_sweep;
        if sw.delta_b_offset.is_some() && sw.delta_b_fixed.is_some() {
            return Err(config_err("[g2_sweep] give at most one of delta_b_offset and delta_b_fixed"));
        }
        if sw.fit_population.is_some_and(|t| !(t > 0.0)) {
            return Err(config_err("[g2_sweep] fit_population must be positive"));
        }
        let t = &self.g2_tau;
        if !(t.tau_step.value > 0.0 && t.tau_max.value >= 0.0) {
            return Err(config_err("[g2_tau] tau_step must be positive and tau_max non-negative"));
        }
        if self.map.match_population.is_some_and(|t| !(t > 0.0)) {
            return Err(config_err("[map] match_population must be positive"));
        }
        let e = &self.envelope;
        if e.grid_points == 0 || !(e.g2_tol > 0.0) || e.max_iter == 0 {
            return Err(config_err("[envelope] grid_points, g2_tol and max_iter must be positive"));
        }
        let m = &self.measurement;
        m.chain().map_err(|e| config_err(format!("[measurement] {e}")))?;
        if !(m.n_th >= 0.0) {
            return Err(config_err("[measurement] n_th must be non-negative"));
        }
        if m.packet_size == 0 || m.packets < 2 {
            return Err(config_err("[measurement] packet_size must be positive and packets at least 2"));
        }
        for (k, t) in m.truth.iter().enumerate() {
            t.state().map_err(|e| config_err(format!("[[measurement.truth]] entry {}: {e}", k + 1)))?;
        }
        Ok(())
    }

    /// Circuit at the working point.
    pub fn circuit(&self) -> Result<CircuitParams> {
        let d = &self.device;
        let (l, ls0, ls_op) = (d.inductance.value, d.squid_inductance_zero_flux.value, d.squid_inductance_operating.value);
        let c = match d.capacitance {
            Some(c) => c.value,
            None => capacitance_for_frequency(l, ls_op, d.omega_a.value)?,
        };
        let flux = flux_for_squid_inductance(ls_op, ls0)?;
        CircuitParams::new(l, ls0, c, d.omega_a.value, flux)
    }

    pub fn coupling(&self) -> Result<CouplingMatrix> {
        CouplingMatrix::new(self.device.coupling_matrix, self.device.omega_0.value)
    }

    pub fn port_chains(&self) -> Result<Vec<ThermalChain>> {
        let w0 = self.device.omega_0.value;
        self.device
            .ports
            .iter()
            .map(|p| {
                let stages = p
                    .stages
                    .iter()
                    .map(|s| AttenuatorStage { transmission: db_to_power_factor(-s.attenuation.value), temperature: s.temperature.value })
                    .collect();
                match (p.source_temperature, p.source_population) {
                    (Some(t), _) => ThermalChain::from_source_temperature(w0, t.value, stages),
                    (None, Some(n)) => ThermalChain::new(n, stages),
                    (None, None) => Err(config_err("port chain without a source")),
                }
            })
            .collect()
    }

    /// Thermal occupation at each port near `omega_0`.
    pub fn port_populations(&self) -> Result<[f64; 4]> {
        let chains = self.port_chains()?;
        if chains.len() != 4 {
            return Err(config_err("exactly four port chains are required"));
        }
        let w0 = self.device.omega_0.value;
        Ok(std::array::from_fn(|k| chains[k].population(w0)))
    }

    /// `(n_th_a, n_th_b)`: configured values, or the port-rate weighted
    /// averages of the chain populations.
    pub fn mode_populations(&self) -> Result<(f64, f64)> {
        let rates = self.coupling()?.simplified().port_rates().map(|p| p.rate);
        let d = &self.device;
        let (na, nb) = crate::device::mode_thermal_populations(&rates, &self.port_populations()?, d.gamma_a.value, d.gamma_b.value, d.n_box)?;
        Ok((self.system.n_th_a.unwrap_or(na), self.system.n_th_b.unwrap_or(nb)))
    }

    /// Simplified two-mode model at zero detuning and zero pump.
    pub fn system_params(&self) -> Result<SystemParams> {
        let s = &self.system;
        let (na, nb) = self.mode_populations()?;
        let p = SystemParams::two_mode(0.0, 0.0, s.j.value, s.u.value, C64::new(0.0, 0.0), s.kappa_a.value, s.kappa_b.value, na, nb);
        p.validate()?;
        Ok(p)
    }

    pub fn cutoffs(&self) -> (usize, usize) {
        (self.system.cutoff, self.system.cutoff)
    }

    /// Pump amplitude for `power` (W) quoted before the input line.
    pub fn eta_for_power(&self, power: f64) -> Result<C64> {
        if let Some(eta) = self.pump.eta {
            return Ok(C64::new(eta.value, 0.0));
        }
        let gamma_1 = self.coupling()?.simplified().port_rates()[0].rate;
        let omega_p = self.pump.omega_p.map_or(self.device.omega_a.value, |w| w.value);
        let at_sample = power * db_to_power_factor(-self.pump.line_attenuation.value);
        Ok(C64::new(eta_from_power(at_sample, gamma_1, omega_p)?, 0.0))
    }

    pub fn g2_sweep_lock(&self) -> DetuningLock {
        match (self.g2_sweep.delta_b_offset, self.g2_sweep.delta_b_fixed) {
            (_, Some(b)) => DetuningLock::Fixed(b.value),
            (Some(o), None) => DetuningLock::Offset(o.value),
            (None, None) => DetuningLock::Equal,
        }
    }

    /// Delays `0, step, ..., <= tau_max`.
    pub fn tau_grid(&self) -> Vec<f64> {
        let t = &self.g2_tau;
        let n = (t.tau_max.value / t.tau_step.value * (1.0 + 1e-12)).floor() as usize;
        (0..=n).map(|k| k as f64 * t.tau_step.value).collect()
    }

    pub fn minimize_options(&self, p: &SystemParams) -> MinimizeOptions {
        let e = &self.envelope;
        let mut o = MinimizeOptions::for_params(p);
        o.grid_points = e.grid_points;
        if let Some(w) = e.grid_half_width {
            o.grid_half_width = w.value;
        }
        o.box_half_width = e.box_half_width.map_or(2.0 * o.grid_half_width, |w| w.value);
        o.detuning_tol = 1e-4 * o.grid_half_width;
        o.g2_tol = e.g2_tol;
        o.max_iter = e.max_iter;
        o.cutoffs = self.cutoffs();
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn default_config_reproduces_sample() {
        let c = RunConfig::default();
        let circuit = c.circuit().unwrap();
        assert!(rel(circuit.kerr().unwrap(), mhz(0.25)) < 0.05);
        assert!(rel(circuit.omega_b().unwrap(), c.device.omega_a.value) < 1e-12);
        let n = c.port_populations().unwrap();
        assert!(rel(n[0], 1.5e-2) < 0.05, "{}", n[0]);
        assert!(rel(n[1], 6.5e-4) < 0.05, "{}", n[1]);
        assert_eq!((n[2], n[3]), (0.0, 0.0));
        let (na, nb) = c.mode_populations().unwrap();
        assert!(rel(na, 1.4e-3) < 0.05, "{na}");
        assert_eq!(nb, 0.0);
        let eta = c.eta_for_power(c.g2_tau.power.value).unwrap();
        assert!((eta.re / mhz(1.0) - 43.76).abs() < 0.1, "{}", eta.re / mhz(1.0));
        assert_eq!(c.tau_grid().len(), 401);
        assert_eq!(c.g2_tau.delta_a.len(), 4);
    }

    #[test]
    fn missing_unit_reports_line() {
        let text = "[system]\nj = \"25.1 MHz_over_2pi\"\nu = 0.25\n";
        let msg = RunConfig::from_toml_str(text).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("missing unit"), "{msg}");
    }

    #[test]
    fn partial_file_keeps_default_sections() {
        let text = "[output]\ndirectory = \"elsewhere\"\n";
        let c = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(c.output.directory, "elsewhere");
        assert_eq!(c.system, RunConfig::default().system);
    }

    #[test]
    fn rejects_bad_values() {
        let base = RunConfig::default();
        let mut c = base.clone();
        c.measurement.epsilon = 0.9;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.device.ports.pop();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.g2_sweep.delta_b_fixed = Some(Quantity::new(0.0));
        c.g2_sweep.delta_b_offset = Some(Quantity::new(0.0));
        assert!(c.validate().is_err());
        assert!(RunConfig::from_toml_str("[nonsense]\nx = 1\n").is_err());
    }

    #[test]
    fn grids() {
        let g = GridConfig { start: Quantity::new(-1.0), stop: Quantity::new(1.0), points: 3 };
        assert_eq!(g.values(), vec![-1.0, 0.0, 1.0]);
        assert!(GridConfig { points: 0, ..g.clone() }.values().is_empty());
        assert_eq!(GridConfig { points: 1, ..g }.values(), vec![-1.0]);
    }

    #[test]
    fn serialized_config_loads_back() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }
}
