//! Circuit-level model of the two coupled resonators.
//!
//! The tunable resonator is a series `L`, `L_s(phi)`, `C` circuit whose SQUID
//! inductance follows `L_s = L_s0 / |cos(pi phi / phi_0)|`. From it we derive
//! the resonance frequency and the Kerr nonlinearity; from the port coupling
//! matrix we derive port rates, and from attenuator chains the port thermal
//! occupations that enter the master equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{bose_einstein, VON_KLITZING};

/// `|cos(pi phi)|` below this value is treated as a divergent SQUID inductance.
pub const SQUID_COS_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Series inductance `L` (H).
    pub inductance: f64,
    /// Zero-flux SQUID inductance `L_s0` (H).
    pub squid_inductance_zero_flux: f64,
    /// Capacitance `C` (F).
    pub capacitance: f64,
    /// Resonance of the linear resonator (rad/s).
    pub omega_a: f64,
    /// Reduced flux `phi / phi_0`.
    pub flux_ratio: f64,
}

impl CircuitParams {
    pub fn new(
        inductance: f64,
        squid_inductance_zero_flux: f64,
        capacitance: f64,
        omega_a: f64,
        flux_ratio: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("inductance", inductance),
            ("squid_inductance_zero_flux", squid_inductance_zero_flux),
            ("capacitance", capacitance),
            ("omega_a", omega_a),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        // validates the flux as well
        squid_inductance(flux_ratio, squid_inductance_zero_flux)?;
        Ok(Self {
            inductance,
            squid_inductance_zero_flux,
            capacitance,
            omega_a,
            flux_ratio,
        })
    }

    pub fn squid_inductance(&self) -> Result<f64> {
        squid_inductance(self.flux_ratio, self.squid_inductance_zero_flux)
    }

    /// Resonance of the tunable resonator at the configured flux.
    pub fn omega_b(&self) -> Result<f64> {
        self.omega_b_at(self.flux_ratio)
    }

    pub fn omega_b_at(&self, flux_ratio: f64) -> Result<f64> {
        let ls = squid_inductance(flux_ratio, self.squid_inductance_zero_flux)?;
        resonance_frequency(self.inductance, ls, self.capacitance)
    }

    pub fn kerr(&self) -> Result<f64> {
        kerr_nonlinearity(self.inductance, self.squid_inductance()?, self.capacitance)
    }
}

/// `L_s0 / |cos(pi flux_ratio)|`.
pub fn squid_inductance(flux_ratio: f64, squid_inductance_zero_flux: f64) -> Result<f64> {
    if !(squid_inductance_zero_flux > 0.0) {
        return Err(Error::invalid("zero-flux SQUID inductance must be positive"));
    }
    let cosine = (std::f64::consts::PI * flux_ratio).cos().abs();
    if !(cosine > SQUID_COS_EPSILON) {
        return Err(Error::SquidDivergence { flux_ratio, cosine });
    }
    Ok(squid_inductance_zero_flux / cosine)
}

/// Reduced flux in `[0, 1/2)` at which the SQUID reaches `squid_inductance`.
pub fn flux_for_squid_inductance(squid_inductance: f64, squid_inductance_zero_flux: f64) -> Result<f64> {
    if !(squid_inductance >= squid_inductance_zero_flux && squid_inductance_zero_flux > 0.0) {
        return Err(Error::invalid(format!(
            "SQUID inductance {squid_inductance:e} H is below its zero-flux value {squid_inductance_zero_flux:e} H"
        )));
    }
    Ok((squid_inductance_zero_flux / squid_inductance).acos() / std::f64::consts::PI)
}

fn check_lc(inductance: f64, squid_inductance: f64, capacitance: f64) -> Result<()> {
    if !(inductance > 0.0 && squid_inductance >= 0.0 && capacitance > 0.0) {
        return Err(Error::invalid(format!(
            "circuit values must be positive (L = {inductance:e}, L_s = {squid_inductance:e}, C = {capacitance:e})"
        )));
    }
    Ok(())
}

/// `1 / sqrt((L + L_s) C)` in rad/s.
pub fn resonance_frequency(inductance: f64, squid_inductance: f64, capacitance: f64) -> Result<f64> {
    check_lc(inductance, squid_inductance, capacitance)?;
    Ok(1.0 / ((inductance + squid_inductance) * capacitance).sqrt())
}

/// Capacitance that puts the series circuit at `omega`.
pub fn capacitance_for_frequency(inductance: f64, squid_inductance: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::invalid("frequency must be positive"));
    }
    check_lc(inductance, squid_inductance, 1.0)?;
    Ok(1.0 / (omega * omega * (inductance + squid_inductance)))
}

/// Kerr nonlinearity `U = pi p^3 / (2 R_K C)` with participation
/// `p = L_s / (L + L_s)`, in rad/s.
pub fn kerr_nonlinearity(inductance: f64, squid_inductance: f64, capacitance: f64) -> Result<f64> {
    check_lc(inductance, squid_inductance, capacitance)?;
    let p = squid_inductance / (inductance + squid_inductance);
    Ok(std::f64::consts::PI * p.powi(3) / (2.0 * VON_KLITZING * capacitance))
}

/// Normal-mode frequencies `(lower, upper)` of two modes coupled by `j`.
pub fn coupled_mode_frequencies(omega_a: f64, omega_b: f64, j: f64) -> (f64, f64) {
    let mean = 0.5 * (omega_a + omega_b);
    let half = (0.25 * (omega_a - omega_b).powi(2) + j * j).sqrt();
    (mean - half, mean + half)
}

/// Port coupling matrix `B` (2 x 4, dimensionless) at reference frequency
/// `omega_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub b: [[f64; 4]; 2],
    pub omega_0: f64,
}

/// Rate and mode weights of one port: `c_j = alpha_j a + beta_j b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortCoupling {
    pub rate: f64,
    /// `None` when the port is uncoupled (`rate == 0`).
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl CouplingMatrix {
    pub fn new(b: [[f64; 4]; 2], omega_0: f64) -> Result<Self> {
        if b.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("coupling matrix must be finite"));
        }
        if !(omega_0 > 0.0) {
            return Err(Error::invalid("reference frequency must be positive"));
        }
        Ok(Self { b, omega_0 })
    }

    /// Keep only a-to-ports-1,2 and b-to-ports-3,4 couplings.
    pub fn simplified(&self) -> Self {
        let mut b = self.b;
        b[0][2] = 0.0;
        b[0][3] = 0.0;
        b[1][0] = 0.0;
        b[1][1] = 0.0;
        Self { b, omega_0: self.omega_0 }
    }

    pub fn port_rates(&self) -> [PortCoupling; 4] {
        std::array::from_fn(|j| {
            let (b1, b2) = (self.b[0][j], self.b[1][j]);
            let norm2 = b1 * b1 + b2 * b2;
            let rate = 0.5 * self.omega_0 * norm2;
            if norm2 > 0.0 {
                let norm = norm2.sqrt();
                PortCoupling { rate, alpha: Some(b1 / norm), beta: Some(b2 / norm) }
            } else {
                PortCoupling { rate, alpha: None, beta: None }
            }
        })
    }
}

/// Convenience wrapper matching the free-function form of the operation.
pub fn port_rates(cm: &CouplingMatrix) -> [PortCoupling; 4] {
    cm.port_rates()
}

/// One attenuator: power transmission `D` in `(0, 1]` anchored at `temperature`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuatorStage {
    pub transmission: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalChain {
    pub source_population: f64,
    pub stages: Vec<AttenuatorStage>,
}

impl ThermalChain {
    pub fn new(source_population: f64, stages: Vec<AttenuatorStage>) -> Result<Self> {
        if !(source_population >= 0.0) {
            return Err(Error::invalid("source population must be non-negative"));
        }
        for s in &stages {
            if !(s.transmission > 0.0 && s.transmission <= 1.0) {
                return Err(Error::invalid(format!("attenuator transmission {} outside (0, 1]", s.transmission)));
            }
            if !(s.temperature >= 0.0) {
                return Err(Error::invalid(format!("negative stage temperature {}", s.temperature)));
            }
        }
        Ok(Self { source_population, stages })
    }

    /// Chain fed by black-body radiation at `temperature`.
    pub fn from_source_temperature(omega: f64, temperature: f64, stages: Vec<AttenuatorStage>) -> Result<Self> {
        Self::new(bose_einstein(omega, temperature), stages)
    }

    pub fn population(&self, omega_0: f64) -> f64 {
        attenuation_chain_population(self, omega_0)
    }
}

/// Fold `n <- D n + (1 - D) n_BE(omega_0, T)` over the stages in order.
pub fn attenuation_chain_population(chain: &ThermalChain, omega_0: f64) -> f64 {
    chain.stages.iter().fold(chain.source_population, |n, s| {
        s.transmission * n + (1.0 - s.transmission) * bose_einstein(omega_0, s.temperature)
    })
}

/// Rate-weighted mode populations `(n_th_a, n_th_b)` of the simplified model.
///
/// Ports 1, 2 feed mode a, ports 3, 4 feed mode b; the intrinsic channels
/// `gamma_a`, `gamma_b` see the box population.
pub fn mode_thermal_populations(
    rates: &[f64; 4],
    port_populations: &[f64; 4],
    gamma_a: f64,
    gamma_b: f64,
    n_box: f64,
) -> Result<(f64, f64)> {
    if rates.iter().chain([&gamma_a, &gamma_b]).any(|r| !(*r >= 0.0)) {
        return Err(Error::invalid("loss rates must be non-negative"));
    }
    let kappa_a = rates[0] + rates[1] + gamma_a;
    let kappa_b = rates[2] + rates[3] + gamma_b;
    if !(kappa_a > 0.0 && kappa_b > 0.0) {
        return Err(Error::invalid(format!("total loss rates must be positive (kappa_a = {kappa_a}, kappa_b = {kappa_b})")));
    }
    let n_a = (rates[0] * port_populations[0] + rates[1] * port_populations[1] + gamma_a * n_box) / kappa_a;
    let n_b = (rates[2] * port_populations[2] + rates[3] * port_populations[3] + gamma_b * n_box) / kappa_b;
    Ok((n_a, n_b))
}

/// Pump-off population of mode a for equal loss rates `kappa` and no Kerr
/// term, with `delta = omega_b - omega_a`.
pub fn hybridized_thermal_population(delta: f64, kappa: f64, j: f64, n_th_a: f64, n_th_b: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa must be positive"));
    }
    let denom = delta * delta + kappa * kappa + 4.0 * j * j;
    let w_a = (delta * delta + kappa * kappa + 2.0 * j * j) / denom;
    let w_b = 2.0 * j * j / denom;
    Ok(w_a * n_th_a + w_b * n_th_b)
}

/// Result of fitting `(L, L_s0)` to a flux-tuning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxFit {
    pub inductance: f64,
    pub squid_inductance_zero_flux: f64,
    /// RMS of the relative frequency residual.
    pub rms_residual: f64,
    pub iterations: usize,
}

/// Least-squares fit of `omega(phi) = 1 / sqrt((L + L_s0/|cos(pi phi)|) C)` to
/// `(flux_ratio, omega)` samples at known capacitance.
///
/// The total inductance `1/(omega^2 C)` is linear in `(L, L_s0)`, which gives
/// the starting point; Levenberg-Marquardt then minimizes the relative
/// frequency residuals.
pub fn fit_flux_curve(samples: &[(f64, f64)], capacitance: f64) -> Result<FluxFit> {
    if samples.len() < 2 {
        return Err(Error::invalid("flux fit needs at least two samples"));
    }
    if !(capacitance > 0.0) {
        return Err(Error::invalid("capacitance must be positive"));
    }
    let mut secants = Vec::with_capacity(samples.len());
    for &(phi, omega) in samples {
        let c = (std::f64::consts::PI * phi).cos().abs();
        if !(c > SQUID_COS_EPSILON) {
            return Err(Error::SquidDivergence { flux_ratio: phi, cosine: c });
        }
        if !(omega > 0.0) {
            return Err(Error::invalid("sample frequencies must be positive"));
        }
        secants.push(1.0 / c);
    }

    // linear initialization on total inductance
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&(_, omega), &sec) in samples.iter().zip(&secants) {
        let ltot = 1.0 / (omega * omega * capacitance);
        s11 += 1.0;
        s12 += sec;
        s22 += sec * sec;
        r1 += ltot;
        r2 += sec * ltot;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-12 * s11 * s22 {
        return Err(Error::invalid("flux samples do not constrain both inductances"));
    }
    let mut params = [(s22 * r1 - s12 * r2) / det, (s11 * r2 - s12 * r1) / det];
    let scale = params[0].abs().max(params[1].abs());

    let residuals = |p: &[f64; 2]| -> Vec<f64> {
        samples
            .iter()
            .zip(&secants)
            .map(|(&(_, omega), &sec)| {
                let ltot = p[0] + p[1] * sec;
                if ltot <= 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / ((ltot * capacitance).sqrt() * omega) - 1.0
                }
            })
            .collect()
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let mut lambda = 1e-3;
    let mut res = residuals(&params);
    let mut current = cost(&res);
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it + 1;
        // Jacobian of the model w.r.t. (L, L_s0), in units of `scale`
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for ((&(_, omega), &sec), &r) in samples.iter().zip(&secants).zip(&res) {
            let ltot = params[0] + params[1] * sec;
            let d = -0.5 * (r + 1.0) / ltot * scale;
            let _ = omega;
            let row = [d, d * sec];
            for a in 0..2 {
                jtr[a] += row[a] * r;
                for b in 0..2 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let a11 = jtj[0][0] * (1.0 + lambda);
            let a22 = jtj[1][1] * (1.0 + lambda);
            let a12 = jtj[0][1];
            let det = a11 * a22 - a12 * a12;
            let step = [
                -(a22 * jtr[0] - a12 * jtr[1]) / det * scale,
                -(a11 * jtr[1] - a12 * jtr[0]) / det * scale,
            ];
            let trial = [params[0] + step[0], params[1] + step[1]];
            let trial_res = residuals(&trial);
            let trial_cost = cost(&trial_res);
            if trial_cost.is_finite() && trial_cost <= current {
                let rel = (step[0].abs() + step[1].abs()) / scale;
                params = trial;
                res = trial_res;
                let decrease = current - trial_cost;
                current = trial_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-14 || decrease <= 1e-30 {
                    return finish(params, current, samples.len(), iterations);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    finish(params, current, samples.len(), iterations)
}

fn finish(params: [f64; 2], cost: f64, n: usize, iterations: usize) -> Result<FluxFit> {
    if !(params[0] > 0.0 && params[1] > 0.0) {
        return Err(Error::invalid(format!(
            "flux fit converged to non-physical inductances L = {:e}, L_s0 = {:e}",
            params[0], params[1]
        )));
    }
    Ok(FluxFit {
        inductance: params[0],
        squid_inductance_zero_flux: params[1],
        rms_residual: (cost / n as f64).sqrt(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::units::{bose_einstein, ghz, mhz};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn squid_identity_and_divergence() {
        assert_eq!(squid_inductance(0.0, 81e-12).unwrap(), 81e-12);
        assert!(matches!(squid_inductance(0.5, 81e-12), Err(Error::SquidDivergence { .. })));
        assert!(matches!(squid_inductance(1.5 + 1e-9, 81e-12), Err(Error::SquidDivergence { .. })));
        // symmetric and periodic
        let a = squid_inductance(0.3, 81e-12).unwrap();
        assert!(rel(squid_inductance(-0.3, 81e-12).unwrap(), a) < 1e-14);
        assert!(rel(squid_inductance(1.3, 81e-12).unwrap(), a) < 1e-12);
    }

    #[test]
    fn squid_operating_point() {
        // cos(pi phi) = 81/337 inverted analytically
        let phi = (81.0f64 / 337.0).acos() / std::f64::consts::PI;
        assert!((phi - 0.4229).abs() < 5e-4);
        let ls = squid_inductance(phi, 81e-12).unwrap();
        assert!(rel(ls, 337e-12) < 1e-12);
        assert!((flux_for_squid_inductance(337e-12, 81e-12).unwrap() - phi).abs() < 1e-15);
    }

    #[test]
    fn resonance_examples() {
        let w = resonance_frequency(1e-9, 0.0, 1e-12).unwrap();
        assert!(rel(w, 1.0 / 1e-21f64.sqrt()) < 1e-15);
        let w2 = resonance_frequency(1e-9, 1e-9, 1e-12).unwrap();
        assert!(rel(w / w2, 2f64.sqrt()) < 1e-14);
        assert!(resonance_frequency(-1e-9, 0.0, 1e-12).is_err());
        assert!(resonance_frequency(1e-9, 0.0, 0.0).is_err());

        let c = capacitance_for_frequency(1.09e-9, 337e-12, ghz(5.878)).unwrap();
        assert!((c - 0.51e-12).abs() < 0.01e-12);
        let back = resonance_frequency(1.09e-9, 337e-12, c).unwrap();
        assert!(rel(back, ghz(5.878)) < 1e-14);
    }

    #[test]
    fn kerr_examples() {
        let c = capacitance_for_frequency(1.09e-9, 337e-12, ghz(5.878)).unwrap();
        let u = kerr_nonlinearity(1.09e-9, 337e-12, c).unwrap();
        assert!(rel(u, mhz(0.25)) < 0.05, "U/2pi = {} MHz", u / mhz(1.0));
        assert_eq!(kerr_nonlinearity(1.09e-9, 0.0, c).unwrap(), 0.0);
        let scaled = kerr_nonlinearity(3.0 * 1.09e-9, 3.0 * 337e-12, c).unwrap();
        assert!(rel(scaled, u) < 1e-14);
    }

    #[test]
    fn port_rate_examples() {
        let cm = CouplingMatrix::new(presets::COUPLING_MATRIX, presets::omega_0()).unwrap();
        let rates = cm.simplified().port_rates();
        for (r, expected) in rates.iter().zip([0.59, 7.95, 0.59, 8.57]) {
            assert!(rel(r.rate, mhz(expected)) < 0.01, "{} vs {}", r.rate / mhz(1.0), expected);
        }
        // full vs simplified totals agree within 1 %
        let full: f64 = cm.port_rates().iter().map(|p| p.rate).sum();
        let simple: f64 = rates.iter().map(|p| p.rate).sum();
        assert!(rel(full, simple) < 0.01);
        for p in cm.port_rates() {
            let (a, b) = (p.alpha.unwrap(), p.beta.unwrap());
            assert!((a * a + b * b - 1.0).abs() < 1e-14);
        }

        let zero = CouplingMatrix::new([[0.0, -0.3, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]], 1.0).unwrap();
        let pr = zero.port_rates();
        assert_eq!(pr[0].rate, 0.0);
        assert!(pr[0].alpha.is_none() && pr[0].beta.is_none());
        assert_eq!(pr[1].alpha, Some(-1.0));
        assert_eq!(pr[1].beta, Some(0.0));
    }

    #[test]
    fn chain_examples() {
        let w = presets::omega_0();
        let full_therm = ThermalChain::new(5.0, vec![AttenuatorStage { transmission: 1e-300, temperature: 0.05 }]).unwrap();
        assert!(rel(full_therm.population(w), bose_einstein(w, 0.05)) < 1e-12);

        let identity = ThermalChain::new(3.25, vec![AttenuatorStage { transmission: 1.0, temperature: 4.0 }; 3]).unwrap();
        assert_eq!(identity.population(w), 3.25);

        // amplifier black body at 2 K through two -20 dB circulators near 0 K
        let port2 = ThermalChain::from_source_temperature(
            w,
            2.0,
            vec![AttenuatorStage { transmission: 1e-2, temperature: 0.0 }; 2],
        )
        .unwrap();
        assert!(rel(port2.population(w), 6.5e-4) < 0.02);

        assert!(ThermalChain::new(1.0, vec![AttenuatorStage { transmission: 0.0, temperature: 1.0 }]).is_err());
        assert!(ThermalChain::new(1.0, vec![AttenuatorStage { transmission: 0.5, temperature: -1.0 }]).is_err());
    }

    #[test]
    fn mode_population_examples() {
        let rates = [mhz(0.59), mhz(7.95), mhz(0.59), mhz(8.57)];
        let (na, nb) = mode_thermal_populations(&rates, &[1.5e-2, 6.5e-4, 0.0, 0.0], mhz(1.81), 0.0, 0.0).unwrap();
        assert!(rel(na, 1.4e-3) < 0.05);
        assert_eq!(nb, 0.0);
        let (na, nb) = mode_thermal_populations(&rates, &[2e-3; 4], mhz(1.0), mhz(2.0), 2e-3).unwrap();
        assert!(rel(na, 2e-3) < 1e-14 && rel(nb, 2e-3) < 1e-14);
        assert_eq!(mode_thermal_populations(&rates, &[0.0; 4], 0.0, 0.0, 0.0).unwrap(), (0.0, 0.0));
        assert!(mode_thermal_populations(&[0.0; 4], &[0.0; 4], 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn hybridized_examples() {
        let n = hybridized_thermal_population(0.0, mhz(10.0), mhz(25.1), 1.4e-3, 0.0).unwrap();
        assert!(rel(n, 7.3e-4) < 0.02);
        assert_eq!(hybridized_thermal_population(mhz(3.0), mhz(10.0), 0.0, 1.4e-3, 0.7).unwrap(), 1.4e-3);
        let n = hybridized_thermal_population(mhz(-4.0), mhz(6.0), mhz(30.0), 2.5e-3, 2.5e-3).unwrap();
        assert!(rel(n, 2.5e-3) < 1e-14);
        let far = hybridized_thermal_population(mhz(1e5), mhz(10.0), mhz(25.1), 1.4e-3, 0.0).unwrap();
        assert!(rel(far, 1.4e-3) < 1e-6);
        assert!(hybridized_thermal_population(0.0, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn avoided_crossing_minimum_is_2j() {
        let (lo, hi) = coupled_mode_frequencies(ghz(5.878), ghz(5.878), mhz(25.1));
        assert!(rel(hi - lo, 2.0 * mhz(25.1)) < 1e-9);
    }

    #[test]
    fn flux_fit_recovers_inductances() {
        let c = capacitance_for_frequency(1.09e-9, 337e-12, ghz(5.878)).unwrap();
        let samples: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let phi = -0.45 + 0.9 * k as f64 / 39.0;
                let ls = squid_inductance(phi, 81e-12).unwrap();
                // deterministic 1e-5 relative "noise"
                let jitter = 1.0 + 1e-5 * ((k * 7919) % 13) as f64 / 13.0;
                (phi, resonance_frequency(1.09e-9, ls, c).unwrap() * jitter)
            })
            .collect();
        let fit = fit_flux_curve(&samples, c).unwrap();
        assert!(rel(fit.inductance, 1.09e-9) < 1e-3, "{fit:?}");
        assert!(rel(fit.squid_inductance_zero_flux, 81e-12) < 1e-2, "{fit:?}");
        assert!(fit.rms_residual < 1e-5);
        assert!(fit_flux_curve(&samples[..1], c).is_err());
    }
}
