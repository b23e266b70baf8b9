use serde::{Deserialize, Serialize};

use crate::device::CouplingMatrix;
use crate::error::{Error, Result};
use crate::C64;

/// One output port: rate `gamma`, jump operator `alpha a + beta b`, bath
/// occupation `n_th`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub rate: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_th: f64,
}

impl Port {
    pub const CLOSED: Port = Port { rate: 0.0, alpha: 0.0, beta: 0.0, n_th: 0.0 };
}

/// Loss channel `rate * D(a_coef a + b_coef b, n_th)` as seen by the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub a_coef: f64,
    pub b_coef: f64,
    pub rate: f64,
    pub n_th: f64,
}

/// Everything the master equation needs, in the pump frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// `omega_p - omega_a` (rad/s).
    pub delta_a: f64,
    /// `omega_p - omega_b` (rad/s).
    pub delta_b: f64,
    pub j: f64,
    pub u: f64,
    pub eta_a: C64,
    pub eta_b: C64,
    pub ports: [Port; 4],
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub n_box: f64,
    /// Ports 1, 2 couple to a only and ports 3, 4 to b only.
    pub simplified: bool,
}

impl SystemParams {
    /// Simplified model specified directly by total loss rates and mode
    /// thermal populations.
    #[allow(clippy::too_many_arguments)]
    pub fn two_mode(
        delta_a: f64,
        delta_b: f64,
        j: f64,
        u: f64,
        eta_a: C64,
        kappa_a: f64,
        kappa_b: f64,
        n_th_a: f64,
        n_th_b: f64,
    ) -> Self {
        let ports = [
            Port { rate: kappa_a, alpha: 1.0, beta: 0.0, n_th: n_th_a },
            Port::CLOSED,
            Port { rate: kappa_b, alpha: 0.0, beta: 1.0, n_th: n_th_b },
            Port::CLOSED,
        ];
        Self {
            delta_a,
            delta_b,
            j,
            u,
            eta_a,
            eta_b: C64::new(0.0, 0.0),
            ports,
            gamma_a: 0.0,
            gamma_b: 0.0,
            n_box: 0.0,
            simplified: true,
        }
    }

    /// Full model from a coupling matrix and per-port populations.
    #[allow(clippy::too_many_arguments)]
    pub fn from_coupling(
        cm: &CouplingMatrix,
        port_populations: [f64; 4],
        gamma_a: f64,
        gamma_b: f64,
        n_box: f64,
        j: f64,
        u: f64,
        simplified: bool,
    ) -> Self {
        let rates = if simplified { cm.simplified().port_rates() } else { cm.port_rates() };
        let ports = std::array::from_fn(|k| Port {
            rate: rates[k].rate,
            alpha: rates[k].alpha.unwrap_or(0.0),
            beta: rates[k].beta.unwrap_or(0.0),
            n_th: port_populations[k],
        });
        Self {
            delta_a: 0.0,
            delta_b: 0.0,
            j,
            u,
            eta_a: C64::new(0.0, 0.0),
            eta_b: C64::new(0.0, 0.0),
            ports,
            gamma_a,
            gamma_b,
            n_box,
            simplified,
        }
    }

    pub fn with_detunings(mut self, delta_a: f64, delta_b: f64) -> Self {
        self.delta_a = delta_a;
        self.delta_b = delta_b;
        self
    }

    pub fn with_eta(mut self, eta_a: C64) -> Self {
        self.eta_a = eta_a;
        self
    }

    pub fn with_kerr(mut self, u: f64) -> Self {
        self.u = u;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.delta_a, self.delta_b, self.j, self.u, self.eta_a.re, self.eta_a.im, self.eta_b.re, self.eta_b.im];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("system parameters must be finite"));
        }
        for (k, p) in self.ports.iter().enumerate() {
            if !(p.rate >= 0.0 && p.n_th >= 0.0) || !p.alpha.is_finite() || !p.beta.is_finite() {
                return Err(Error::invalid(format!("port {} has negative rate or occupation", k + 1)));
            }
        }
        if !(self.gamma_a >= 0.0 && self.gamma_b >= 0.0 && self.n_box >= 0.0) {
            return Err(Error::invalid("intrinsic rates and box occupation must be non-negative"));
        }
        if self.simplified && !(self.kappa_a() > 0.0 && self.kappa_b() > 0.0) {
            return Err(Error::invalid(format!(
                "simplified model needs positive total loss rates (kappa_a = {}, kappa_b = {})",
                self.kappa_a(),
                self.kappa_b()
            )));
        }
        Ok(())
    }

    /// `gamma_1 + gamma_2 + gamma_a`.
    pub fn kappa_a(&self) -> f64 {
        self.ports[0].rate + self.ports[1].rate + self.gamma_a
    }

    /// `gamma_3 + gamma_4 + gamma_b`.
    pub fn kappa_b(&self) -> f64 {
        self.ports[2].rate + self.ports[3].rate + self.gamma_b
    }

    fn weighted(&self, idx: [usize; 2], gamma: f64) -> f64 {
        let total: f64 = idx.iter().map(|&k| self.ports[k].rate).sum::<f64>() + gamma;
        if total <= 0.0 {
            return 0.0;
        }
        (idx.iter().map(|&k| self.ports[k].rate * self.ports[k].n_th).sum::<f64>() + gamma * self.n_box) / total
    }

    pub fn n_th_a(&self) -> f64 {
        self.weighted([0, 1], self.gamma_a)
    }

    pub fn n_th_b(&self) -> f64 {
        self.weighted([2, 3], self.gamma_b)
    }

    /// Loss channels with non-zero rate.
    pub fn channels(&self) -> Vec<Channel> {
        let mut out = Vec::new();
        if self.simplified {
            out.push(Channel { a_coef: 1.0, b_coef: 0.0, rate: self.kappa_a(), n_th: self.n_th_a() });
            out.push(Channel { a_coef: 0.0, b_coef: 1.0, rate: self.kappa_b(), n_th: self.n_th_b() });
        } else {
            for p in &self.ports {
                out.push(Channel { a_coef: p.alpha, b_coef: p.beta, rate: p.rate, n_th: p.n_th });
            }
            out.push(Channel { a_coef: 1.0, b_coef: 0.0, rate: self.gamma_a, n_th: self.n_box });
            out.push(Channel { a_coef: 0.0, b_coef: 1.0, rate: self.gamma_b, n_th: self.n_box });
        }
        out.retain(|c| c.rate > 0.0);
        out
    }

    /// Mean-field damping matrix `sum_k rate_k c_k c_k^T`.
    pub fn damping_matrix(&self) -> [[f64; 2]; 2] {
        let mut g = [[0.0; 2]; 2];
        for c in self.channels() {
            let v = [c.a_coef, c.b_coef];
            for (i, gi) in g.iter_mut().enumerate() {
                for (j, gij) in gi.iter_mut().enumerate() {
                    *gij += c.rate * v[i] * v[j];
                }
            }
        }
        g
    }
}

/// Optimal Kerr nonlinearity for unconventional blockade of two resonant
/// modes with equal loss `kappa` and coupling `j`: `2 kappa^3 / (3 sqrt(3) J^2)`.
pub fn blockade_kerr(kappa: f64, j: f64) -> f64 {
    2.0 * kappa.powi(3) / (3.0 * 3f64.sqrt() * j * j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::units::mhz;

    #[test]
    fn simplified_totals() {
        let cm = CouplingMatrix::new(presets::COUPLING_MATRIX, presets::omega_0()).unwrap();
        let p = SystemParams::from_coupling(&cm, [1.5e-2, 6.6e-4, 0.0, 0.0], presets::gamma_a(), 0.0, 0.0, presets::coupling_j(), presets::kerr_u(), true);
        assert!((p.kappa_a() - mhz(10.35)).abs() / mhz(10.35) < 0.01);
        assert!((p.n_th_a() - 1.4e-3).abs() / 1.4e-3 < 0.03);
        let g = p.damping_matrix();
        assert_eq!(g[0][1], 0.0);
        assert!((g[0][0] - p.kappa_a()).abs() < 1e-6);
        p.validate().unwrap();
    }

    #[test]
    fn validation_rejects_negative_rates() {
        let mut p = SystemParams::two_mode(0.0, 0.0, 1.0, 0.0, C64::new(0.0, 0.0), 1.0, 1.0, 0.0, 0.0);
        p.validate().unwrap();
        p.ports[0].rate = -1.0;
        assert!(p.validate().is_err());
        let q = SystemParams::two_mode(0.0, 0.0, 1.0, 0.0, C64::new(0.0, 0.0), 1.0, 0.0, 0.0, 0.0);
        assert!(q.validate().is_err());
    }
}
