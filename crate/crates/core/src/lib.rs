//! Coupled Kerr-resonator photon blockade toolkit.
//!
//! The crate goes from lumped-circuit parameters of two coupled
//! superconducting resonators to master-equation steady states, Gaussian
//! `g2(0)` / `g2(tau)` estimates, and a synthetic quadrature-measurement chain
//! with IQ-mixer imperfection correction.
//!
//! Module map:
//!
//! - [`device`]: circuit-level derivation of frequencies, Kerr nonlinearity,
//!   port rates and thermal occupations.
//! - [`hilbert`]: truncated two-mode Fock space operators and density matrices.
//! - [`lindblad`]: Liouvillian construction (plain or displaced frame), steady
//!   states, regression-theorem correlators and observables.
//! - [`gaussian`]: `(alpha, n, s)` Gaussian states and every `g2` formula built
//!   from them.
//! - [`measurement`]: trace synthesis, moment estimation, mixer calibration and
//!   packet statistics.
//! - [`sweep`]: detuning scans, 2D maps and `g2` minimization.
//! - [`config`] and [`cli`]: unit-checked configuration and the command line.
//!
//! All frequencies are stored as angular frequencies in rad/s.

// Matrix kernels index several arrays at once; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod device;
pub mod error;
pub mod gaussian;
pub mod hilbert;
pub mod io;
pub mod lindblad;
pub mod measurement;
pub mod presets;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
