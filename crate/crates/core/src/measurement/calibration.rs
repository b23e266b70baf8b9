//! IQ-mixer model: gains, quadrature phase deviation and moment inversion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::moments::MomentSet;
use crate::error::{Error, Result};

/// Largest accepted `|epsilon|`.
pub const MAX_EPSILON: f64 = 0.5;

/// Detection-chain constants: `X_r = sqrt(G_X) X`, `Y_r = sqrt(G_Y) (Y + eps X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstants {
    pub g_x: f64,
    pub g_y: f64,
    pub epsilon: f64,
    /// Amplifier-noise occupation, the pump-off quadrature variance.
    pub n_h: f64,
    /// Noise bandwidth (Hz).
    pub delta_f: f64,
}

impl CalibrationConstants {
    pub fn new(g_x: f64, g_y: f64, epsilon: f64, n_h: f64, delta_f: f64) -> Result<Self> {
        let c = Self { g_x, g_y, epsilon, n_h, delta_f };
        c.validate()?;
        Ok(c)
    }

    /// Unit gains, no phase error.
    pub fn ideal(n_h: f64, delta_f: f64) -> Self {
        Self { g_x: 1.0, g_y: 1.0, epsilon: 0.0, n_h, delta_f }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_mixer()?;
        if !(self.n_h > 0.0) || !self.n_h.is_finite() {
            return Err(Error::invalid(format!("n_h must be positive, got {}", self.n_h)));
        }
        Ok(())
    }

    /// Gains and phase only; a noiseless amplifier (`n_h = 0`) is accepted.
    pub(crate) fn validate_mixer(&self) -> Result<()> {
        if !(self.g_x > 0.0 && self.g_y > 0.0) || !self.g_x.is_finite() || !self.g_y.is_finite() {
            return Err(Error::invalid(format!("gains must be positive, got G_X = {}, G_Y = {}", self.g_x, self.g_y)));
        }
        if !(self.epsilon.abs() < MAX_EPSILON) {
            return Err(Error::invalid(format!("|epsilon| must be below {MAX_EPSILON}, got {}", self.epsilon)));
        }
        if !(self.n_h >= 0.0) || !self.n_h.is_finite() {
            return Err(Error::invalid(format!("n_h must be non-negative, got {}", self.n_h)));
        }
        if !(self.delta_f > 0.0) || !self.delta_f.is_finite() {
            return Err(Error::invalid(format!("noise bandwidth must be positive, got {}", self.delta_f)));
        }
        Ok(())
    }
}

/// Gains and phase deviation from raw pump-off moments, given the pump-off
/// quadrature variance `n_h` they must be rescaled to.
pub fn calibrate(off: &MomentSet, n_h: f64, delta_f: f64) -> Result<CalibrationConstants> {
    if !(n_h > 0.0) {
        return Err(Error::invalid(format!("n_h must be positive, got {n_h}")));
    }
    let x2 = off.get(2, 0)?;
    let y2 = off.get(0, 2)?;
    let xy = off.get(1, 1)?;
    if !(x2 > 0.0) {
        return Err(Error::Calibration(format!("pump-off <X_r^2> = {x2:e} is not positive")));
    }
    let disc = y2 * x2 - xy * xy;
    if !(disc > 0.0) {
        return Err(Error::Calibration(format!("pump-off covariance discriminant {disc:e} is not positive")));
    }
    let g_x = x2 / n_h;
    let g_y = disc / (n_h * x2);
    let epsilon = xy / (n_h * (g_x * g_y).sqrt());
    CalibrationConstants::new(g_x, g_y, epsilon, n_h, delta_f).map_err(|e| Error::Calibration(e.to_string()))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `<X^i (Y + c X)^j>` from `<X^p Y^q>` of the same order.
fn shear(m: &MomentSet, c: f64) -> Result<BTreeMap<(u32, u32), f64>> {
    let mut out = BTreeMap::new();
    for &(i, j) in m.moments.keys() {
        let mut acc = 0.0;
        for k in 0..=j {
            acc += binomial(j, k) * c.powi((j - k) as i32) * m.get(i + j - k, k)?;
        }
        out.insert((i, j), acc);
    }
    Ok(out)
}

/// Raw moments `<X_r^i Y_r^j> = G_X^(i/2) G_Y^(j/2) <X^i (Y + eps X)^j>` of
/// true moments.
pub fn distort_moments(m: &MomentSet, cal: &CalibrationConstants) -> Result<MomentSet> {
    cal.validate_mixer()?;
    let (sx, sy) = (cal.g_x.sqrt(), cal.g_y.sqrt());
    let sheared = shear(m, cal.epsilon)?;
    let moments = sheared.into_iter().map(|((i, j), v)| ((i, j), v * sx.powi(i as i32) * sy.powi(j as i32))).collect();
    let dc = (sx * m.dc.0, sy * (m.dc.1 + cal.epsilon * m.dc.0));
    MomentSet::new(moments, dc, m.n_samples)
}

/// True moments `<X^i Y^j>` from raw ones: the exact inverse of
/// [`distort_moments`], order by order.
pub fn correct_moments(raw: &MomentSet, cal: &CalibrationConstants) -> Result<MomentSet> {
    cal.validate_mixer()?;
    let (sx, sy) = (cal.g_x.sqrt(), cal.g_y.sqrt());
    let scaled: BTreeMap<(u32, u32), f64> =
        raw.moments.iter().map(|(&(i, j), &v)| ((i, j), v / (sx.powi(i as i32) * sy.powi(j as i32)))).collect();
    let unscaled = MomentSet { moments: scaled, dc: raw.dc, n_samples: raw.n_samples };
    let moments = shear(&unscaled, -cal.epsilon)?;
    let x_dc = raw.dc.0 / sx;
    let dc = (x_dc, raw.dc.1 / sy - cal.epsilon * x_dc);
    MomentSet::new(moments, dc, raw.n_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::moment_keys;
    use proptest::prelude::*;

    fn set(values: &[((u32, u32), f64)]) -> MomentSet {
        MomentSet::new(values.iter().copied().collect(), (0.3, -0.7), 10).unwrap()
    }

    fn full(seed: f64) -> MomentSet {
        let m = moment_keys().into_iter().enumerate().map(|(k, key)| (key, 1.0 + (seed * (k + 1) as f64).sin().abs())).collect::<Vec<_>>();
        set(&m)
    }

    /// Inversion formulas written out term by term (the last one with the sign
    /// of its `<X_r Y_r^3>` and `<Y_r^4>` terms as they must be for the
    /// inverse of the shear).
    fn explicit(r: &MomentSet, c: &CalibrationConstants) -> BTreeMap<(u32, u32), f64> {
        let (gx, gy, e) = (c.g_x, c.g_y, c.epsilon);
        let g = |i, j| r.get(i, j).unwrap();
        let mut o = BTreeMap::new();
        o.insert((2, 0), g(2, 0) / gx);
        o.insert((1, 1), g(1, 1) / (gx * gy).sqrt() - e * g(2, 0) / gx);
        o.insert((0, 2), g(0, 2) / gy - 2.0 * e * g(1, 1) / (gx * gy).sqrt() + e * e * g(2, 0) / gx);
        o.insert((3, 0), g(3, 0) / gx.powf(1.5));
        o.insert((2, 1), -(e * gy.sqrt() * g(3, 0) - gx.sqrt() * g(2, 1)) / (gx.powf(1.5) * gy.sqrt()));
        o.insert((1, 2), -(-e * e * gy * g(3, 0) + 2.0 * e * gx.sqrt() * gy.sqrt() * g(2, 1) - gx * g(1, 2)) / (gx.powf(1.5) * gy));
        o.insert(
            (0, 3),
            -(e.powi(3) * gy.powf(1.5) * g(3, 0) - 3.0 * e * e * gx.sqrt() * gy * g(2, 1) + 3.0 * e * gx * gy.sqrt() * g(1, 2)
                - gx.powf(1.5) * g(0, 3))
                / (gx.powf(1.5) * gy.powf(1.5)),
        );
        o.insert((4, 0), g(4, 0) / (gx * gx));
        o.insert((3, 1), -(e * gy.sqrt() * g(4, 0) - gx.sqrt() * g(3, 1)) / (gx * gx * gy.sqrt()));
        o.insert((2, 2), -(-e * e * gy * g(4, 0) + 2.0 * e * gx.sqrt() * gy.sqrt() * g(3, 1) - gx * g(2, 2)) / (gx * gx * gy));
        o.insert(
            (1, 3),
            -(e.powi(3) * gy.powf(1.5) * g(4, 0) - 3.0 * e * e * gx.sqrt() * gy * g(3, 1) + 3.0 * e * gx * gy.sqrt() * g(2, 2)
                - gx.powf(1.5) * g(1, 3))
                / (gx * gx * gy.powf(1.5)),
        );
        let y4_head = -(-e.powi(4) * gy * gy * g(4, 0) + 4.0 * e.powi(3) * gx.sqrt() * gy.powf(1.5) * g(3, 1) - 6.0 * e * e * gx * gy * g(2, 2)) / (gx * gx * gy * gy);
        let y4_tail = (-4.0 * e * gx.powf(1.5) * gy.sqrt() * g(1, 3) + gx * gx * g(0, 4)) / (gx * gx * gy * gy);
        o.insert((0, 4), y4_head + y4_tail);
        o
    }

    #[test]
    fn identity_calibration_is_a_no_op() {
        let m = full(0.7);
        let c = CalibrationConstants::ideal(12.5, 24e6);
        let out = correct_moments(&m, &c).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn second_order_formula() {
        let (a, b, cc) = (2.0, 0.3, 1.7);
        let cal = CalibrationConstants::new(1.3, 0.8, 0.12, 10.0, 24e6).unwrap();
        let raw = set(&[((2, 0), a), ((1, 1), b), ((0, 2), cc)]);
        let out = correct_moments(&raw, &cal).unwrap();
        let expected = cc / cal.g_y - 2.0 * cal.epsilon * b / (cal.g_x * cal.g_y).sqrt() + cal.epsilon.powi(2) * a / cal.g_x;
        assert!((out.get(0, 2).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn matches_explicit_formulas_through_fourth_order() {
        let cal = CalibrationConstants::new(1.7, 0.6, -0.23, 10.0, 24e6).unwrap();
        let raw = full(1.3);
        let out = correct_moments(&raw, &cal).unwrap();
        for (key, v) in explicit(&raw, &cal) {
            let got = out.get(key.0, key.1).unwrap();
            assert!((got - v).abs() < 1e-12 * v.abs().max(1.0), "{key:?}: {got} vs {v}");
        }
        let x = raw.dc.0 / cal.g_x.sqrt();
        assert!((out.dc.0 - x).abs() < 1e-15);
        assert!((out.dc.1 - (raw.dc.1 / cal.g_y.sqrt() - cal.epsilon * x)).abs() < 1e-15);
    }

    #[test]
    fn calibration_identity_chain() {
        let off = set(&[((2, 0), 12.5), ((0, 2), 12.5), ((1, 1), 0.0)]);
        let c = calibrate(&off, 12.5, 24e6).unwrap();
        assert_eq!((c.g_x, c.g_y, c.epsilon), (1.0, 1.0, 0.0));
    }

    #[test]
    fn calibrated_off_moments_are_rescaled_exactly() {
        let truth = CalibrationConstants::new(2.3, 0.4, 0.17, 12.5, 24e6).unwrap();
        let true_off = set(&[((2, 0), 12.5), ((0, 2), 12.5), ((1, 1), 0.0)]);
        let raw = distort_moments(&true_off, &truth).unwrap();
        let c = calibrate(&raw, 12.5, 24e6).unwrap();
        assert!((c.g_x - 2.3).abs() < 1e-13 && (c.g_y - 0.4).abs() < 1e-13 && (c.epsilon - 0.17).abs() < 1e-13);
        let back = correct_moments(&raw, &c).unwrap();
        assert!((back.get(2, 0).unwrap() - 12.5).abs() < 1e-12);
        assert!((back.get(0, 2).unwrap() - 12.5).abs() < 1e-12);
        assert!(back.get(1, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_off_data() {
        let off = set(&[((2, 0), 1.0), ((0, 2), 1.0), ((1, 1), 1.0)]);
        assert!(matches!(calibrate(&off, 1.0, 24e6), Err(Error::Calibration(_))));
        assert!(CalibrationConstants::new(1.0, 1.0, 0.6, 1.0, 24e6).is_err());
        assert!(CalibrationConstants::new(1.0, 1.0, 0.0, 0.0, 24e6).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn forward_then_inverse_is_identity(
            values in proptest::collection::vec(-3.0f64..3.0, 14),
            dc in (-2.0f64..2.0, -2.0f64..2.0),
            gx in 0.05f64..20.0,
            gy in 0.05f64..20.0,
            eps in -0.49f64..0.49,
        ) {
            let mut moments: BTreeMap<(u32, u32), f64> = moment_keys().into_iter().zip(values).collect();
            // second order must be a covariance for the raw set to be valid
            let (x2, y2) = (moments[&(2, 0)].abs() + 0.1, moments[&(0, 2)].abs() + 0.1);
            let xy = moments[&(1, 1)] / 3.0 * 0.99 * (x2 * y2).sqrt();
            moments.extend([((2, 0), x2), ((0, 2), y2), ((1, 1), xy)]);
            let m = MomentSet::new(moments, dc, 100).unwrap();
            let cal = CalibrationConstants::new(gx, gy, eps, 1.0, 24e6).unwrap();
            let back = correct_moments(&distort_moments(&m, &cal).unwrap(), &cal).unwrap();
            for (key, v) in &m.moments {
                let scale = m.moments.iter().filter(|(k, _)| k.0 + k.1 == key.0 + key.1).map(|(_, x)| x.abs()).fold(0.0, f64::max);
                prop_assert!((back.moments[key] - v).abs() <= 1e-10 * scale, "{key:?}");
            }
            prop_assert!((back.dc.0 - dc.0).abs() < 1e-12 && (back.dc.1 - dc.1).abs() < 1e-12);
        }
    }
}
