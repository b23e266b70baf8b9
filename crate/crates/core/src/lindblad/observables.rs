//! Observables of mode a from a displaced-frame state.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{g2_zero, GaussianState};
use crate::hilbert::{annihilation, trace_product, DensityMatrix, Operator};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    /// `|alpha|^2 + <d^dag d>`.
    pub n_tot: f64,
    /// Gaussian `g2(0)` from `(alpha, n, s)`.
    pub g2: f64,
    /// Even-moment expansion
    /// `(<d^dag d^dag d d> + alpha^2 <d^dag d^dag> + alpha*^2 <d d> + 4 |alpha|^2 <d^dag d> + |alpha|^4) / n_tot^2`.
    pub g2_prime: f64,
    /// `<a^dag a>` including odd moments of `d`.
    pub n_tot_exact: f64,
    /// `<a^dag a^dag a a> / <a^dag a>^2` including odd moments of `d`.
    pub g2_exact: f64,
    pub alpha: C64,
    pub n: f64,
    pub s: C64,
    /// Residual `<d>` of the truncated displaced state.
    pub d_mean: C64,
}

impl Observables {
    pub fn gaussian_state(&self) -> GaussianState {
        GaussianState::new_unchecked(self.alpha, self.n, self.s)
    }
}

/// Mode-a annihilation operator on the joint space of `rho`.
fn mode_a(rho: &DensityMatrix) -> Result<Mat<C64>> {
    if rho.dims.len() != 2 {
        return Err(Error::DimensionMismatch(format!("expected a two-mode state, got dims {:?}", rho.dims)));
    }
    let a = annihilation(rho.dims[0])?;
    let ib = Operator::identity(vec![rho.dims[1]]);
    Ok(crate::hilbert::tensor(&a, &ib).data)
}

/// Normally ordered moments `<d^dag^k d^l>` of mode a for `k + l <= 4`,
/// indexed `[k][l]`.
pub fn normal_moments(rho: &DensityMatrix) -> Result<[[C64; 5]; 5]> {
    let d = mode_a(rho)?;
    let dd = d.adjoint().to_owned();
    let n = d.nrows();
    let mut powers = vec![Mat::<C64>::identity(n, n)];
    let mut dpowers = vec![Mat::<C64>::identity(n, n)];
    for k in 1..=4 {
        powers.push(&powers[k - 1] * &d);
        dpowers.push(&dpowers[k - 1] * &dd);
    }
    let mut m = [[C64::new(0.0, 0.0); 5]; 5];
    for k in 0..=4 {
        for l in 0..=(4 - k) {
            m[k][l] = trace_product(&(&dpowers[k] * &powers[l]), &rho.data);
        }
    }
    Ok(m)
}

/// Population and `g2` estimates from a displaced-frame state with
/// mean-field amplitude `alpha`.
pub fn observables(rho_displaced: &DensityMatrix, alpha: C64) -> Result<Observables> {
    let m = normal_moments(rho_displaced)?;
    let n = m[1][1].re;
    let s = m[0][2];
    let a2 = alpha.norm_sqr();
    let n_tot = a2 + n;
    if !(n_tot > 0.0) {
        return Err(Error::ZeroPopulation(n_tot));
    }
    let g2 = g2_zero(&GaussianState::new_unchecked(alpha, n, s))?;
    let g2_prime = (m[2][2].re + 2.0 * (alpha * alpha * m[2][0]).re + 4.0 * a2 * n + a2 * a2) / (n_tot * n_tot);

    // <(d + alpha)^dag (d + alpha)> and the fourth-order analogue, all terms
    let ac = alpha.conj();
    let n_exact = (m[1][1] + alpha * m[1][0] + ac * m[0][1]).re + a2;
    let binom = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 2.0, 1.0]];
    let mut g2num = C64::new(0.0, 0.0);
    // (d^dag + alpha*)^2 (d + alpha)^2 = sum C(2,k) C(2,l) alpha*^(2-k) alpha^(2-l) d^dag^k d^l
    for k in 0..=2usize {
        for l in 0..=2usize {
            g2num += binom[2][k] * binom[2][l] * ac.powu(2 - k as u32) * alpha.powu(2 - l as u32) * m[k][l];
        }
    }
    if !(n_exact > 0.0) {
        return Err(Error::ZeroPopulation(n_exact));
    }
    Ok(Observables {
        n_tot,
        g2,
        g2_prime,
        n_tot_exact: n_exact,
        g2_exact: g2num.re / (n_exact * n_exact),
        alpha,
        n,
        s,
        d_mean: m[0][1],
    })
}

/// Observables of an undisplaced state: `alpha = <a>` and `d = a - alpha`.
pub fn observables_undisplaced(rho: &DensityMatrix) -> Result<Observables> {
    let a = mode_a(rho)?;
    let alpha = trace_product(&a, &rho.data);
    let ad = a.adjoint().to_owned();
    let num = &ad * &a;
    let pop = trace_product(&num, &rho.data).re;
    if !(pop > 0.0) {
        return Err(Error::ZeroPopulation(pop));
    }
    let g2num = trace_product(&(&(&ad * &ad) * &(&a * &a)), &rho.data).re;
    let aa = trace_product(&(&a * &a), &rho.data);
    let nfl = pop - alpha.norm_sqr();
    let s = aa - alpha * alpha;
    let g2 = g2_zero(&GaussianState::new_unchecked(alpha, nfl, s))?;
    Ok(Observables {
        n_tot: pop,
        g2,
        g2_prime: g2num / (pop * pop),
        n_tot_exact: pop,
        g2_exact: g2num / (pop * pop),
        alpha,
        n: nfl,
        s,
        d_mean: C64::new(0.0, 0.0),
    })
}
