//! Reference numbers of the measured two-resonator sample.
//!
//! These feed the built-in configuration and the acceptance tests. Rates are
//! angular (rad/s), built with [`crate::units::mhz`].

use crate::units::{ghz, mhz};

/// Series inductance of the tunable resonator (H).
pub const INDUCTANCE: f64 = 1.09e-9;
/// Zero-flux SQUID inductance (H).
pub const SQUID_INDUCTANCE_ZERO_FLUX: f64 = 81e-12;
/// SQUID inductance at the operating point where the two resonators cross (H).
pub const SQUID_INDUCTANCE_OPERATING: f64 = 337e-12;

/// Resonance of the linear resonator, rad/s.
pub fn omega_a() -> f64 {
    ghz(5.878)
}

/// Reference frequency at which the coupling matrix was computed, rad/s.
pub fn omega_0() -> f64 {
    ghz(5.878)
}

/// Port coupling matrix (rows: modes a, b; columns: ports 1..4).
pub const COUPLING_MATRIX: [[f64; 4]; 2] = [
    [14.2e-3, -52.0e-3, 0.8e-3, 3.9e-3],
    [-0.8e-3, -3.4e-3, -14.2e-3, 54.0e-3],
];

pub fn coupling_j() -> f64 {
    mhz(25.1)
}

pub fn kerr_u() -> f64 {
    mhz(0.25)
}

pub fn kappa_a() -> f64 {
    mhz(10.35)
}

pub fn kappa_b() -> f64 {
    mhz(7.0)
}

/// Internal loss of resonator a, fixed so that the total matches `kappa_a`.
pub fn gamma_a() -> f64 {
    mhz(1.81)
}

/// Mode-a thermal population used to offset measured `n`.
pub const N_TH_MEASURED: f64 = 7.8e-4;

/// Effective amplifier-noise population referred to the resonator output.
pub const N_H: f64 = 12.5;

/// Noise bandwidth of the AC acquisition chain (Hz, ordinary frequency).
pub const NOISE_BANDWIDTH_HZ: f64 = 24e6;

/// Amplifier noise temperature (K).
pub const AMPLIFIER_NOISE_TEMPERATURE: f64 = 2.0;
