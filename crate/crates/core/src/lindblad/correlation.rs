//! Two-time correlators by the quantum regression theorem.

use faer::Mat;
use serde::Serialize;

use super::expm::expm;
use super::liouvillian::{unvec, vec, Liouvillian};
use crate::error::{Error, Result};
use crate::hilbert::{trace_product, DensityMatrix, TwoMode};
use crate::C64;

/// Largest superoperator side propagated with a dense exponential.
pub const MAX_DENSE_DIM: usize = 2500;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoTimeCorrelation {
    /// Delays (s).
    pub tau: Vec<f64>,
    /// `<d^dag(0) d(tau)>`.
    pub n_tau: Vec<C64>,
    /// `<d(tau) d(0)>`, the ordering that enters `<a^dag a^dag a a>`.
    pub s_tau: Vec<C64>,
    /// `<d(0) d(tau)>`, the other operator ordering.
    pub s_tau_reversed: Vec<C64>,
    /// `<d^dag d>` at equal times.
    pub n_zero: f64,
    /// `<a^dag(0) a^dag(tau) a(tau) a(0)> / <a^dag a>^2` regressed directly,
    /// without a Gaussian assumption.
    pub g2_regression: Vec<f64>,
    /// Amplitude `alpha` of the full field `a = alpha + d`.
    pub alpha: C64,
}

impl TwoTimeCorrelation {
    /// `max |s - s_reversed| / max |s|` over the grid.
    pub fn ordering_discrepancy(&self) -> f64 {
        let diff = self.s_tau.iter().zip(&self.s_tau_reversed).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = self.s_tau.iter().map(|s| s.norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            diff / scale
        } else {
            0.0
        }
    }
}

/// Propagates many vectors through `e^{L tau}` on a non-decreasing grid,
/// reusing one exponential per distinct step.
struct Propagator<'a> {
    dense: Mat<C64>,
    cache: Vec<(f64, Mat<C64>)>,
    _l: &'a Liouvillian,
}

impl<'a> Propagator<'a> {
    fn new(l: &'a Liouvillian) -> Result<Self> {
        if l.size() > MAX_DENSE_DIM {
            return Err(Error::DimensionOverflow { dim: l.size(), limit: MAX_DENSE_DIM });
        }
        Ok(Self { dense: l.to_dense(), cache: Vec::new(), _l: l })
    }

    fn step(&mut self, dt: f64) -> Result<&Mat<C64>> {
        let pos = self.cache.iter().position(|(t, _)| (t - dt).abs() <= 1e-12 * dt.abs().max(f64::MIN_POSITIVE));
        let idx = match pos {
            Some(i) => i,
            None => {
                let scaled = Mat::from_fn(self.dense.nrows(), self.dense.ncols(), |i, j| self.dense[(i, j)] * dt);
                self.cache.push((dt, expm(&scaled)?));
                self.cache.len() - 1
            }
        };
        Ok(&self.cache[idx].1)
    }
}

fn check_grid(tau: &[f64]) -> Result<()> {
    if tau.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("delays must be finite and non-negative"));
    }
    if tau.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("delay grid must be non-decreasing"));
    }
    Ok(())
}

/// `n(tau)`, `s(tau)` (both orderings) and the exact intensity correlation.
///
/// In a displaced Liouvillian `d` is the shifted mode operator itself and
/// `alpha` the displacement; otherwise `d = a - <a>` and `alpha = <a>`.
pub fn two_time_correlations(l: &Liouvillian, rho_ss: &DensityMatrix, tau: &[f64]) -> Result<TwoTimeCorrelation> {
    check_grid(tau)?;
    let n = l.hilbert_dim();
    if rho_ss.dim() != n {
        return Err(Error::DimensionMismatch(format!("state side {} vs Liouvillian {n}", rho_ss.dim())));
    }
    let modes = TwoMode::new(l.dims.0, l.dims.1)?;
    let rho = &rho_ss.data;
    let a = &modes.a.data;
    let (d, alpha) = match l.displacement {
        Some((alpha, _)) => (a.clone(), alpha),
        None => {
            let mean = trace_product(a, rho);
            (Mat::from_fn(n, n, |i, j| a[(i, j)] - if i == j { mean } else { C64::new(0.0, 0.0) }), mean)
        }
    };
    let dd = d.adjoint().to_owned();
    let full = Mat::from_fn(n, n, |i, j| d[(i, j)] + if i == j { alpha } else { C64::new(0.0, 0.0) });
    let full_d = full.adjoint().to_owned();
    let full_num = &full_d * &full;

    let n_zero = trace_product(&(&dd * &d), rho).re;
    let pop = trace_product(&full_num, rho).re;
    if !(pop > 0.0) {
        return Err(Error::ZeroPopulation(pop));
    }

    let seeds = [rho * &dd, &d * rho, rho * &d, &(&full * rho) * &full_d];
    let size = l.size();
    let mut state = Mat::from_fn(size, seeds.len(), |r, c| vec(&seeds[c])[r]);
    let mut prop = Propagator::new(l)?;

    let mut out = TwoTimeCorrelation {
        tau: tau.to_vec(),
        n_tau: Vec::with_capacity(tau.len()),
        s_tau: Vec::with_capacity(tau.len()),
        s_tau_reversed: Vec::with_capacity(tau.len()),
        n_zero,
        g2_regression: Vec::with_capacity(tau.len()),
        alpha,
    };
    let mut t_prev = 0.0;
    for &t in tau {
        let dt = t - t_prev;
        if dt > 0.0 {
            state = prop.step(dt)? * &state;
        }
        t_prev = t;
        let col = |c: usize| unvec(&(0..size).map(|r| state[(r, c)]).collect::<Vec<_>>(), n);
        out.n_tau.push(trace_product(&d, &col(0)));
        out.s_tau.push(trace_product(&d, &col(1)));
        out.s_tau_reversed.push(trace_product(&d, &col(2)));
        out.g2_regression.push(trace_product(&full_num, &col(3)).re / (pop * pop));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{build_liouvillian, mean_field_steady_state, steady_state, SystemParams};
    use crate::units::mhz;

    fn setup(eta: f64) -> (Liouvillian, DensityMatrix) {
        let p = SystemParams::two_mode(mhz(-3.0), mhz(-3.0), mhz(25.1), mhz(0.25), C64::new(mhz(eta), 0.0), mhz(10.35), mhz(7.0), 1.4e-3, 0.0);
        let mf = mean_field_steady_state(&p).unwrap();
        let l = build_liouvillian(&p, Some((mf.alpha, mf.beta)), (4, 4)).unwrap();
        let rho = steady_state(&l).unwrap();
        (l, rho)
    }

    #[test]
    fn equal_time_values_and_decay() {
        let (l, rho) = setup(30.0);
        let tau: Vec<f64> = (0..=400).map(|k| k as f64 * 2e-9).collect();
        let c = two_time_correlations(&l, &rho, &tau).unwrap();
        assert!((c.n_tau[0].re - c.n_zero).abs() < 1e-15);
        assert!(c.n_tau[0].im.abs() < 1e-9 && c.n_tau[0].re >= 0.0);
        assert!(c.s_tau[0].norm_sqr() <= c.n_zero * (c.n_zero + 1.0) + 1e-9);
        // equal-time orderings coincide since [d, d] = 0
        assert!((c.s_tau[0] - c.s_tau_reversed[0]).norm() < 1e-15);
        // at 800 ns (about 25 / kappa) only the mean-value product survives
        let modes = TwoMode::new(4, 4).unwrap();
        let mean = trace_product(&modes.a.data, &rho.data);
        let last = c.n_tau.len() - 1;
        assert!((c.n_tau[last] - mean.conj() * mean).norm() < 1e-6 * c.n_zero.max(1e-12));
        assert!((c.s_tau[last] - mean * mean).norm() < 1e-6 * c.s_tau[0].norm());
    }

    #[test]
    fn nonuniform_grid_matches_uniform() {
        let (l, rho) = setup(20.0);
        let uniform: Vec<f64> = (0..=20).map(|k| k as f64 * 2e-9).collect();
        let sparse = vec![0.0, 6e-9, 10e-9, 40e-9];
        let a = two_time_correlations(&l, &rho, &uniform).unwrap();
        let b = two_time_correlations(&l, &rho, &sparse).unwrap();
        for (t, &idx) in sparse.iter().zip(&[0usize, 3, 5, 20]) {
            assert!((uniform[idx] - t).abs() < 1e-20);
            assert!((a.n_tau[idx] - b.n_tau[sparse.iter().position(|x| x == t).unwrap()]).norm() < 1e-10 * a.n_zero);
        }
        assert!(two_time_correlations(&l, &rho, &[1e-9, 0.0]).is_err());
    }
}
