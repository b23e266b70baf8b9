//! Master equation of the pumped coupled resonators.
//!
//! The usual route is: mean field, displaced Liouvillian at a small Fock
//! cutoff, sparse steady state, then observables or regression correlators.
//! [`solve_point`] bundles it.

mod correlation;
mod expm;
mod liouvillian;
mod meanfield;
mod observables;
mod params;
mod steady;

pub use correlation::{two_time_correlations, TwoTimeCorrelation, MAX_DENSE_DIM};
pub use expm::expm;
pub use liouvillian::{build_liouvillian, hamiltonian, jump_operators, unvec, vec, Liouvillian, MAX_LIOUVILLE_DIM};
pub use meanfield::{mean_field_residual, mean_field_steady_state, MeanField};
pub use observables::{normal_moments, observables, observables_undisplaced, Observables};
pub use params::{blockade_kerr, Channel, Port, SystemParams};
pub use steady::{steady_state, steady_state_residual};

use crate::error::Result;
use crate::hilbert::DensityMatrix;

/// Default Fock cutoff per mode in the displaced frame.
pub const DEFAULT_CUTOFF: usize = 4;

#[derive(Debug, Clone)]
pub struct PointSolution {
    pub mean_field: MeanField,
    pub liouvillian: Liouvillian,
    pub rho: DensityMatrix,
    pub observables: Observables,
}

/// Mean field, displaced steady state and observables at one parameter point.
pub fn solve_point(p: &SystemParams, cutoffs: (usize, usize)) -> Result<PointSolution> {
    let mean_field = mean_field_steady_state(p)?;
    let liouvillian = build_liouvillian(p, Some((mean_field.alpha, mean_field.beta)), cutoffs)?;
    let rho = steady_state(&liouvillian)?;
    let observables = observables(&rho, mean_field.alpha)?;
    Ok(PointSolution { mean_field, liouvillian, rho, observables })
}
