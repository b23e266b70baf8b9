//! Physical constants and unit helpers.
//!
//! Internally every frequency is an angular frequency in rad/s. Values quoted
//! as "2pi x f MHz" enter through [`mhz`].

use std::f64::consts::TAU;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / TAU;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// R_K = h / e^2, about 25.8 kOhm.
pub const VON_KLITZING: f64 = PLANCK / (ELEMENTARY_CHARGE * ELEMENTARY_CHARGE);

/// Angular frequency of `f` MHz, i.e. `2 pi f 10^6` rad/s.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Angular frequency of `f` GHz.
pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e9
}

/// Inverse of [`mhz`].
pub fn to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

/// Bose-Einstein occupation of a mode at angular frequency `omega` and
/// temperature `temperature` (kelvin). Zero temperature gives zero.
pub fn bose_einstein(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (BOLTZMANN * temperature);
    1.0 / x.exp_m1()
}

/// Power in watts of a level given in dBm.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Linear power factor of a gain in dB (negative for attenuation).
pub fn db_to_power_factor(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn von_klitzing_value() {
        assert!((VON_KLITZING - 25_812.807).abs() < 1e-2);
    }

    #[test]
    fn bose_einstein_limits() {
        assert_eq!(bose_einstein(ghz(5.0), 0.0), 0.0);
        // high temperature: n ~ kT / hbar w - 1/2
        let w = ghz(5.878);
        let n = bose_einstein(w, 300.0);
        let classical = BOLTZMANN * 300.0 / (HBAR * w);
        assert!((n - (classical - 0.5)).abs() / n < 1e-4);
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watts(-30.0) - 1e-6).abs() < 1e-20);
        assert!((db_to_power_factor(-20.0) - 0.01).abs() < 1e-15);
    }
}
