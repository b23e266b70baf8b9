use faer::sparse::{SparseColMat, Triplet};
use faer::linalg::solvers::Solve;
use faer::Mat;

use super::liouvillian::{unvec, Liouvillian};
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, EIGEN_TOL, HERMITIAN_TOL};
use crate::C64;

/// Tolerance on `|L rho|` relative to `|L|` (max norms).
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Null vector of `L` normalized to unit trace.
///
/// Row 0 of `L` is replaced by the trace functional and the resulting linear
/// system is solved by sparse LU.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let n = l.hilbert_dim();
    let size = l.size();
    let scale = l.max_abs();
    if !(scale > 0.0) {
        return Err(Error::SteadyState("Liouvillian is identically zero".into()));
    }
    let mut trip: Vec<Triplet<usize, usize, C64>> = l.entries().filter(|&(r, _, _)| r != 0).map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    for i in 0..n {
        trip.push(Triplet::new(0, i * n + i, C64::new(scale, 0.0)));
    }
    let a = SparseColMat::<usize, C64>::try_new_from_triplets(size, size, &trip).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let lu = a.sp_lu().map_err(|e| Error::SteadyState(format!("sparse LU failed: {e:?}")))?;
    let mut rhs = Mat::<C64>::zeros(size, 1);
    rhs[(0, 0)] = C64::new(scale, 0.0);
    let x = lu.solve(&rhs);
    let v: Vec<C64> = (0..size).map(|k| x[(k, 0)]).collect();
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SteadyState("degenerate null space: solution is not finite".into()));
    }

    let mut rho = DensityMatrix::new_unchecked(vec![l.dims.0, l.dims.1], unvec(&v, n));
    let herm = rho.hermiticity_error();
    let max_entry = rho.data.norm_max();
    if herm > 1e3 * HERMITIAN_TOL * max_entry.max(1.0) {
        return Err(Error::SteadyState(format!("solution is not Hermitian (error {herm:e})")));
    }
    rho.hermitize();
    let tr = rho.trace();
    rho.data = Mat::from_fn(n, n, |i, j| rho.data[(i, j)] / tr.re);

    let residual = l.apply_to(&rho.data).norm_max() / scale;
    if residual > RESIDUAL_TOL {
        return Err(Error::SteadyState(format!("residual |L rho| / |L| = {residual:e}")));
    }
    let min = rho.min_eigenvalue()?;
    if min < -EIGEN_TOL {
        return Err(Error::SteadyState(format!("steady state has eigenvalue {min:e}; raise the Fock cutoff")));
    }
    Ok(rho)
}

/// `|L rho|_max / |L|_max`.
pub fn steady_state_residual(l: &Liouvillian, rho: &DensityMatrix) -> f64 {
    l.apply_to(&rho.data).norm_max() / l.max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expectation, TwoMode};
    use crate::lindblad::{build_liouvillian, SystemParams};
    use crate::units::mhz;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn vacuum_without_drive_or_heat() {
        let p = SystemParams::two_mode(mhz(1.0), mhz(-2.0), mhz(25.1), mhz(0.25), c(0.0), mhz(10.0), mhz(7.0), 0.0, 0.0);
        let rho = steady_state(&build_liouvillian(&p, None, (4, 4)).unwrap()).unwrap();
        let mut ket = vec![c(0.0); 16];
        ket[0] = c(1.0);
        assert!(rho.overlap_with_pure(&ket).re > 1.0 - 1e-8);
    }

    #[test]
    fn detailed_balance_single_mode() {
        let nth = 0.2;
        let p = SystemParams::two_mode(0.0, 0.0, 0.0, 0.0, c(0.0), mhz(5.0), mhz(5.0), nth, 0.0);
        let rho = steady_state(&build_liouvillian(&p, None, (8, 2)).unwrap()).unwrap();
        for k in 0..7 {
            let (p0, p1) = (rho.data[(2 * k, 2 * k)].re, rho.data[(2 * k + 2, 2 * k + 2)].re);
            assert!((p1 / p0 - nth / (nth + 1.0)).abs() < 1e-6);
        }
        for i in 0..16 {
            for j in 0..16 {
                if i != j {
                    assert!(rho.data[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn uncoupled_thermal_fixed_point() {
        // U = 0, no drive, each mode at its own bath: product thermal state
        let p = SystemParams::two_mode(mhz(3.0), mhz(-1.0), 0.0, 0.0, c(0.0), mhz(8.0), mhz(6.0), 0.05, 0.02);
        let rho = steady_state(&build_liouvillian(&p, None, (6, 6)).unwrap()).unwrap();
        let expected = DensityMatrix::thermal(vec![6, 6], &[0.05, 0.02]).unwrap();
        assert!((&rho.data - &expected.data).norm_max() < 1e-12);
    }

    #[test]
    fn far_detuned_mode_keeps_its_bath() {
        // decoupled limit: a-mode occupation approaches n_th_a
        let p = SystemParams::two_mode(0.0, mhz(2000.0), mhz(25.1), mhz(0.25), c(0.0), mhz(10.0), mhz(7.0), 1.4e-3, 0.0);
        let rho = steady_state(&build_liouvillian(&p, None, (4, 4)).unwrap()).unwrap();
        let modes = TwoMode::new(4, 4).unwrap();
        let na = expectation(&(&modes.a.dagger() * &modes.a), &rho).unwrap().re;
        assert!((na - 1.4e-3).abs() / 1.4e-3 < 0.05, "{na}");
    }
}
