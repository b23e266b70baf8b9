//! Gaussian states `(alpha, n, s)` and the `g2` formulas built from them.
//!
//! `alpha = <a>`, `n = <d^dag d>` and `s = <d d>` with `d = a - alpha`. The
//! quadratures of a field `f` are `X = (f + f*)/sqrt(2)` and
//! `Y = (f - f*)/(i sqrt(2))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::TwoTimeCorrelation;
use crate::measurement::MomentSet;
use crate::C64;

/// Slack on `|s|^2 <= n (n + 1)`.
pub const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub alpha: C64,
    pub n: f64,
    pub s: C64,
}

impl GaussianState {
    pub fn new(alpha: C64, n: f64, s: C64) -> Result<Self> {
        let g = Self { alpha, n, s };
        g.check_physical()?;
        Ok(g)
    }

    /// No physicality check, for noisy estimates.
    pub fn new_unchecked(alpha: C64, n: f64, s: C64) -> Self {
        Self { alpha, n, s }
    }

    pub fn coherent(alpha: C64) -> Self {
        Self { alpha, n: 0.0, s: C64::new(0.0, 0.0) }
    }

    pub fn thermal(n: f64) -> Self {
        Self { alpha: C64::new(0.0, 0.0), n, s: C64::new(0.0, 0.0) }
    }

    pub fn check_physical(&self) -> Result<()> {
        if !(self.n >= 0.0) {
            return Err(Error::NonPhysical(format!("negative occupation n = {}", self.n)));
        }
        if self.s.norm_sqr() > self.n * (self.n + 1.0) + PHYSICALITY_TOL {
            return Err(Error::NonPhysical(format!("|s|^2 = {:e} exceeds n(n+1) = {:e}", self.s.norm_sqr(), self.n * (self.n + 1.0))));
        }
        Ok(())
    }

    pub fn n_tot(&self) -> f64 {
        self.alpha.norm_sqr() + self.n
    }

    /// `arg(s / alpha^2)`.
    pub fn phase(&self) -> f64 {
        (self.s / (self.alpha * self.alpha)).arg()
    }

    /// AC quadrature covariance `[[<X^2>, <XY>], [<XY>, <Y^2>]]` of the
    /// fluctuations `d`, in normal order.
    pub fn quadrature_covariance(&self) -> [[f64; 2]; 2] {
        [[self.n + self.s.re, self.s.im], [self.s.im, self.n - self.s.re]]
    }
}

/// Wick expansion of `<a^dag(0) a^dag(tau) a(tau) a(0)> / n_tot^2` for a
/// Gaussian field, with `n_tau = <d^dag(0) d(tau)>` and `s_tau = <d(tau) d(0)>`.
fn wick_g2(alpha: C64, n_zero: f64, n_tau: C64, s_tau: C64) -> Result<f64> {
    let a2 = alpha.norm_sqr();
    let total = a2 + n_zero;
    if !(total > 0.0) {
        return Err(Error::ZeroPopulation(total));
    }
    let num = 2.0 * a2 * n_tau.re + 2.0 * (alpha.conj() * alpha.conj() * s_tau).re + s_tau.norm_sqr() + n_tau.norm_sqr();
    Ok(1.0 + num / (total * total))
}

/// `g2(0) = 1 + (2|alpha|^2 (n + |s| cos phi) + |s|^2 + n^2) / (|alpha|^2 + n)^2`.
pub fn g2_zero(g: &GaussianState) -> Result<f64> {
    wick_g2(g.alpha, g.n, C64::new(g.n, 0.0), g.s)
}

/// Time-dependent `g2(tau)` on the correlation grid.
pub fn g2_tau(alpha: C64, corr: &TwoTimeCorrelation) -> Result<Vec<f64>> {
    corr.n_tau.iter().zip(&corr.s_tau).map(|(&n, &s)| wick_g2(alpha, corr.n_zero, n, s)).collect()
}

/// Statistical standard deviation of the `n` estimator from one moment set.
fn n_sigma(m: &MomentSet, n_h: f64) -> f64 {
    if m.n_samples == 0 {
        return 0.0;
    }
    let x2 = m.get(2, 0).unwrap_or(n_h);
    let y2 = m.get(0, 2).unwrap_or(n_h);
    let var = match (m.get(4, 0), m.get(0, 4), m.get(2, 2)) {
        (Ok(x4), Ok(y4), Ok(x2y2)) => (x4 + y4 + 2.0 * x2y2 - (x2 + y2).powi(2)) / 4.0,
        _ => (0.5 * (x2 + y2)).powi(2),
    };
    (var.max(0.0) / m.n_samples as f64).sqrt()
}

/// `(alpha, n, s)` from calibrated pump-on and pump-off moments.
///
/// `n` carries the `+ n_th` offset for the pump-off population. Estimates more
/// than five standard deviations below zero are calibration failures.
pub fn gaussian_params_from_moments(on: &MomentSet, off: &MomentSet, n_th: f64, n_h: f64) -> Result<GaussianState> {
    let alpha = C64::new(on.dc.0, on.dc.1) / std::f64::consts::SQRT_2;
    let dx2 = on.get(2, 0)? - off.get(2, 0)?;
    let dy2 = on.get(0, 2)? - off.get(0, 2)?;
    // <XY>_0 vanishes after calibration; subtracting it keeps the estimator
    // unbiased if it does not
    let xy = on.get(1, 1)? - off.get(1, 1)?;
    let n = 0.5 * (dx2 + dy2) + n_th;
    let s = C64::new(0.5 * (dx2 - dy2), xy);
    let sigma = n_sigma(on, n_h).hypot(n_sigma(off, n_h));
    if sigma > 0.0 && n < -5.0 * sigma {
        return Err(Error::Calibration(format!("reconstructed n = {n:e} is {:.1} sigma below zero", -n / sigma)));
    }
    Ok(GaussianState::new_unchecked(alpha, n, s))
}

/// Moments `M[k][l] = <f*^k f^l>` for `k + l <= 4`, indexed `[k][l]`.
pub type ComplexMoments = [[C64; 5]; 5];

/// Coefficients of `prod (x + c_m y)` as `[p][q]` for `x^p y^q`.
fn expand(factors: &[C64]) -> Vec<Vec<C64>> {
    let n = factors.len();
    let mut c = vec![vec![C64::new(0.0, 0.0); n + 1]; n + 1];
    c[0][0] = C64::new(1.0, 0.0);
    for (m, &f) in factors.iter().enumerate() {
        let mut next = vec![vec![C64::new(0.0, 0.0); n + 1]; n + 1];
        for p in 0..=m {
            for q in 0..=(m - p) {
                let v = c[p][q];
                if v != C64::new(0.0, 0.0) {
                    next[p + 1][q] += v;
                    next[p][q + 1] += v * f;
                }
            }
        }
        c = next;
    }
    c
}

/// `<f*^k f^l>` from quadrature moments `xy(p, q) = <X^p Y^q>`.
pub fn complex_moments(xy: impl Fn(u32, u32) -> Result<f64>) -> Result<ComplexMoments> {
    let mut m = [[C64::new(0.0, 0.0); 5]; 5];
    let i = C64::new(0.0, 1.0);
    for k in 0..=4usize {
        for l in 0..=(4 - k) {
            let mut factors = vec![-i; k];
            factors.extend(std::iter::repeat_n(i, l));
            let c = expand(&factors);
            let mut acc = C64::new(0.0, 0.0);
            for (p, row) in c.iter().enumerate() {
                for (q, &v) in row.iter().enumerate() {
                    if p + q == k + l && v != C64::new(0.0, 0.0) {
                        acc += v * xy(p as u32, q as u32)?;
                    }
                }
            }
            m[k][l] = acc * 0.5f64.powf((k + l) as f64 / 2.0);
        }
    }
    Ok(m)
}

/// `<X^p Y^q>` for `p + q <= 4` from `<f*^k f^l>`, indexed `[p][q]`.
pub fn quadrature_moments(m: &ComplexMoments) -> [[f64; 5]; 5] {
    // X = (f* + f)/sqrt 2, Y = i (f* - f)/sqrt 2
    let i = C64::new(0.0, 1.0);
    let mut out = [[0.0; 5]; 5];
    for p in 0..=4usize {
        for q in 0..=(4 - p) {
            let mut factors: Vec<(C64, C64)> = vec![(C64::new(1.0, 0.0), C64::new(1.0, 0.0)); p];
            factors.extend(std::iter::repeat_n((i, -i), q));
            // expand prod (u_m f* + v_m f)
            let n = p + q;
            let mut c = vec![vec![C64::new(0.0, 0.0); n + 1]; n + 1];
            c[0][0] = C64::new(1.0, 0.0);
            for (step, &(u, v)) in factors.iter().enumerate() {
                let mut next = vec![vec![C64::new(0.0, 0.0); n + 1]; n + 1];
                for k in 0..=step {
                    for l in 0..=(step - k) {
                        next[k + 1][l] += c[k][l] * u;
                        next[k][l + 1] += c[k][l] * v;
                    }
                }
                c = next;
            }
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..=n {
                acc += c[k][n - k] * m[k][n - k];
            }
            out[p][q] = acc.re * 0.5f64.powf(n as f64 / 2.0);
        }
    }
    out
}

fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for e in 0..n {
        let mut next = Vec::new();
        for part in &out {
            for b in 0..part.len() {
                let mut p = part.clone();
                p[b].push(e);
                next.push(p);
            }
            let mut p = part.clone();
            p.push(vec![e]);
            next.push(p);
        }
        out = next;
    }
    out
}

/// Label list with `k` conjugate entries followed by `l` plain ones.
fn labels(k: usize, l: usize) -> Vec<bool> {
    std::iter::repeat_n(true, k).chain(std::iter::repeat_n(false, l)).collect()
}

fn block_counts(block: &[usize], lab: &[bool]) -> (usize, usize) {
    let k = block.iter().filter(|&&e| lab[e]).count();
    (k, block.len() - k)
}

/// Joint cumulants `kappa[k][l]` of `(f*, f)` from moments.
pub fn cumulants_from_moments(m: &ComplexMoments) -> ComplexMoments {
    let mut kappa = [[C64::new(0.0, 0.0); 5]; 5];
    for order in 1..=4usize {
        let parts = set_partitions(order);
        for k in 0..=order {
            let l = order - k;
            let lab = labels(k, l);
            let mut rest = C64::new(0.0, 0.0);
            for part in parts.iter().filter(|p| p.len() > 1) {
                let mut prod = C64::new(1.0, 0.0);
                for b in part {
                    let (bk, bl) = block_counts(b, &lab);
                    prod *= kappa[bk][bl];
                }
                rest += prod;
            }
            kappa[k][l] = m[k][l] - rest;
        }
    }
    kappa
}

/// Moments from joint cumulants; the inverse of [`cumulants_from_moments`].
pub fn moments_from_cumulants(kappa: &ComplexMoments) -> ComplexMoments {
    let mut m = [[C64::new(0.0, 0.0); 5]; 5];
    m[0][0] = C64::new(1.0, 0.0);
    for order in 1..=4usize {
        let parts = set_partitions(order);
        for k in 0..=order {
            let lab = labels(k, order - k);
            m[k][order - k] = parts
                .iter()
                .map(|part| {
                    part.iter().fold(C64::new(1.0, 0.0), |acc, b| {
                        let (bk, bl) = block_counts(b, &lab);
                        acc * kappa[bk][bl]
                    })
                })
                .sum();
        }
    }
    m
}

/// `g2' = <a^dag a^dag a a> / <a^dag a>^2` from calibrated fourth-order
/// moments, without assuming a Gaussian state.
///
/// The measured field is `d + h^dag` with independent Gaussian `h`, so every
/// cumulant of order two or more is the sum of a `d` part and an `h` part; the
/// pump-off set (thermal `d` at `n_th`) supplies the `h` part. `alpha` comes
/// from the DC channel.
pub fn g2prime_from_fourth_moments(on: &MomentSet, off: &MomentSet, alpha: C64, n_th: f64) -> Result<f64> {
    for (name, m) in [("pump-on", on), ("pump-off", off)] {
        if !(1..=4).all(|o| m.has_order(o)) {
            return Err(Error::invalid(format!("{name} moments must include every order up to 4")));
        }
    }
    let k_on = cumulants_from_moments(&complex_moments(|p, q| on.get(p, q))?);
    let k_off = cumulants_from_moments(&complex_moments(|p, q| off.get(p, q))?);
    let mut kappa = [[C64::new(0.0, 0.0); 5]; 5];
    for k in 0..=4usize {
        for l in 0..=(4 - k) {
            if k + l >= 2 {
                kappa[k][l] = k_on[k][l] - k_off[k][l];
            }
        }
    }
    kappa[1][1] += n_th;
    // the resonator field a = alpha + d
    kappa[1][0] = alpha.conj();
    kappa[0][1] = alpha;
    let m = moments_from_cumulants(&kappa);
    let pop = m[1][1].re;
    if !(pop > 0.0) {
        return Err(Error::Calibration(format!("reconstructed <a^dag a> = {pop:e} is not positive")));
    }
    Ok(m[2][2].re / (pop * pop))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coherent_thermal_and_squeezed_limits() {
        assert_eq!(g2_zero(&GaussianState::coherent(c(0.3, -0.2))).unwrap(), 1.0);
        assert!((g2_zero(&GaussianState::thermal(0.01)).unwrap() - 2.0).abs() < 1e-15);
        let alpha = c(0.1, 0.05);
        let a2 = alpha.norm_sqr();
        for phi in [0.0, 0.5, 1.0, 2.0, std::f64::consts::PI] {
            // |s| = |alpha|^2 at relative phase phi
            let s = alpha * alpha / a2 * C64::from_polar(a2, phi);
            let g = GaussianState::new_unchecked(alpha, 0.0, s);
            assert!((g.phase() - phi).abs() < 1e-12 || (g.phase() + phi).abs() < 1e-12);
            assert!((g2_zero(&g).unwrap() - (2.0 + 2.0 * phi.cos())).abs() < 1e-14);
        }
        assert!(matches!(g2_zero(&GaussianState::thermal(0.0)), Err(Error::ZeroPopulation(_))));
    }

    #[test]
    fn physicality() {
        assert!(GaussianState::new(c(0.0, 0.0), 0.1, c(0.33, 0.0)).is_ok());
        assert!(GaussianState::new(c(0.0, 0.0), 0.1, c(0.34, 0.0)).is_err());
        assert!(GaussianState::new(c(0.0, 0.0), -0.1, c(0.0, 0.0)).is_err());
    }

    fn set(entries: &[((u32, u32), f64)], dc: (f64, f64)) -> MomentSet {
        MomentSet::new(entries.iter().copied().collect::<BTreeMap<_, _>>(), dc, 0).unwrap()
    }

    #[test]
    fn estimator_arithmetic() {
        let off = set(&[((2, 0), 12.5), ((1, 1), 0.0), ((0, 2), 12.5)], (0.0, 0.0));
        let g = gaussian_params_from_moments(&off, &off, 7.8e-4, 12.5).unwrap();
        assert_eq!((g.alpha, g.n, g.s), (c(0.0, 0.0), 7.8e-4, c(0.0, 0.0)));
        let on = set(&[((2, 0), 12.5), ((1, 1), 0.0), ((0, 2), 12.5)], (0.3, 0.3));
        let g = gaussian_params_from_moments(&on, &off, 0.0, 12.5).unwrap();
        assert!((g.alpha - c(0.3, 0.3) / 2f64.sqrt()).norm() < 1e-16);
        let on = set(&[((2, 0), 12.53), ((1, 1), 0.004), ((0, 2), 12.51)], (0.0, 0.0));
        let g = gaussian_params_from_moments(&on, &off, 0.001, 12.5).unwrap();
        assert!((g.n - 0.021).abs() < 1e-12 && (g.s - c(0.01, 0.004)).norm() < 1e-12);
    }

    #[test]
    fn large_negative_n_is_a_calibration_failure() {
        let mut off = set(&[((2, 0), 12.5), ((1, 1), 0.0), ((0, 2), 12.5)], (0.0, 0.0));
        off.n_samples = 1_000_000;
        let mut on = set(&[((2, 0), 12.3), ((1, 1), 0.0), ((0, 2), 12.3)], (0.0, 0.0));
        on.n_samples = 1_000_000;
        assert!(matches!(gaussian_params_from_moments(&on, &off, 0.0, 12.5), Err(Error::Calibration(_))));
    }

    /// Quadrature moments of a zero-mean Gaussian vector with covariance
    /// `[[a, b], [b, d]]` by Isserlis' theorem, written out per monomial.
    fn isserlis(a: f64, b: f64, d: f64, p: u32, q: u32) -> f64 {
        match (p, q) {
            (1, 0) | (0, 1) | (3, 0) | (2, 1) | (1, 2) | (0, 3) => 0.0,
            (2, 0) => a,
            (1, 1) => b,
            (0, 2) => d,
            (4, 0) => 3.0 * a * a,
            (3, 1) => 3.0 * a * b,
            (2, 2) => a * d + 2.0 * b * b,
            (1, 3) => 3.0 * d * b,
            (0, 4) => 3.0 * d * d,
            _ => unreachable!(),
        }
    }

    fn gaussian_set(cov: [[f64; 2]; 2], dc: (f64, f64)) -> MomentSet {
        let m = crate::measurement::moment_keys()
            .into_iter()
            .map(|(p, q)| ((p, q), isserlis(cov[0][0], cov[0][1], cov[1][1], p, q)))
            .collect();
        MomentSet::new(m, dc, 0).unwrap()
    }

    #[test]
    fn g2prime_matches_gaussian_g2_on_gaussian_input() {
        let n_h = 12.5;
        let n_th = 7.8e-4;
        let truth = GaussianState::new(c(0.08, -0.05), 2.3e-3, c(-4e-3, 6e-3)).unwrap();
        let cov = truth.quadrature_covariance();
        let on = gaussian_set([[n_h + cov[0][0], cov[0][1]], [cov[1][0], n_h + cov[1][1]]], (0.0, 0.0));
        let off = gaussian_set([[n_h + n_th, 0.0], [0.0, n_h + n_th]], (0.0, 0.0));
        let g2p = g2prime_from_fourth_moments(&on, &off, truth.alpha, n_th).unwrap();
        assert!((g2p - g2_zero(&truth).unwrap()).abs() < 1e-8, "{g2p}");
        let coh = g2prime_from_fourth_moments(&off, &off, c(0.2, 0.1), n_th).unwrap();
        let expected = g2_zero(&GaussianState::new_unchecked(c(0.2, 0.1), n_th, c(0.0, 0.0))).unwrap();
        assert!((coh - expected).abs() < 1e-8);
    }

    #[test]
    fn cumulant_roundtrip_and_known_values() {
        // Poisson-like: moments of a constant field z are z*^k z^l, cumulants vanish beyond order 1
        let z = c(0.4, -0.7);
        let mut m = [[c(0.0, 0.0); 5]; 5];
        for k in 0..=4 {
            for l in 0..=(4 - k) {
                m[k][l] = z.conj().powu(k as u32) * z.powu(l as u32);
            }
        }
        let kappa = cumulants_from_moments(&m);
        assert!((kappa[1][0] - z.conj()).norm() < 1e-15);
        for k in 0..=4 {
            for l in 0..=(4 - k) {
                if k + l >= 2 {
                    assert!(kappa[k][l].norm() < 1e-14);
                }
            }
        }
        let back = moments_from_cumulants(&kappa);
        for k in 0..=4 {
            for l in 0..=(4 - k) {
                assert!((back[k][l] - m[k][l]).norm() < 1e-14);
            }
        }
        assert_eq!(set_partitions(4).len(), 15);
    }

    #[test]
    fn quadrature_complex_roundtrip() {
        let xy = |p: u32, q: u32| -> Result<f64> { Ok(((p * 3 + q * 5) % 7) as f64 * 0.1 + p as f64 - 0.3 * q as f64) };
        let m = complex_moments(xy).unwrap();
        let back = quadrature_moments(&m);
        for p in 0..=4u32 {
            for q in 0..=(4 - p) {
                if p + q >= 1 {
                    assert!((back[p as usize][q as usize] - xy(p, q).unwrap()).abs() < 1e-12);
                }
            }
        }
        // <f* f> = (<X^2> + <Y^2>)/2
        assert!((m[1][1].re - 0.5 * (xy(2, 0).unwrap() + xy(0, 2).unwrap())).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn phase_rotation_invariance(ar in -1.0f64..1.0, ai in -1.0f64..1.0, n in 0.0f64..0.5, r in 0.0f64..1.0, ps in 0.0f64..6.3, theta in 0.0f64..6.3) {
            let smax = (n * (n + 1.0)).sqrt();
            let g = GaussianState::new(c(ar, ai), n, C64::from_polar(r * smax, ps)).unwrap();
            prop_assume!(g.n_tot() > 1e-6);
            let rot = GaussianState::new_unchecked(g.alpha * C64::from_polar(1.0, theta), g.n, g.s * C64::from_polar(1.0, 2.0 * theta));
            let (a, b) = (g2_zero(&g).unwrap(), g2_zero(&rot).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn nonnegative_for_physical_states(ar in -1.0f64..1.0, ai in -1.0f64..1.0, n in 0.0f64..2.0, r in 0.0f64..1.0, ps in 0.0f64..6.3) {
            let smax = (n * (n + 1.0)).sqrt();
            let g = GaussianState::new(c(ar, ai), n, C64::from_polar(r * smax, ps)).unwrap();
            prop_assume!(g.n_tot() > 1e-9);
            prop_assert!(g2_zero(&g).unwrap() >= -1e-12);
        }

        #[test]
        fn thermal_dominated_limit(n in 1.0f64..10.0, scale in 1e-4f64..1e-3) {
            let g = GaussianState::new_unchecked(c(scale, 0.0), n, c(scale * scale, 0.0));
            let v = g2_zero(&g).unwrap();
            prop_assert!((v - 2.0).abs() <= 10.0 * scale * scale / n);
        }
    }
}
