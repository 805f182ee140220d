//! Photon recoil spectroscopy of a trapped ion.
//!
//! Pipeline: optical Bloch dynamics of the spectroscopy ion ([`bloch`]) feed
//! the per-pulse Fokker-Planck coefficients ([`recoil_coeffs`]); motional
//! states are propagated and overlapped in phase space ([`phasespace`]),
//! turned into sensitivities and Fisher information ([`metrology`]),
//! Doppler systematic shifts ([`doppler`]) and optimized probe states
//! ([`stateopt`]).

// `!(x > 0.0)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bloch;
pub mod doppler;
pub mod error;
pub mod linalg;
pub mod metrology;
pub mod numerics;
pub mod optim;
pub mod phasespace;
pub mod quadrature;
pub mod recoil_coeffs;
pub mod stateopt;

pub use bloch::{bloch_matrix, correlation_yy, solve_bloch, BlochSolver, BlochTrajectory, BlochVector, PulseParams};
pub use error::{Error, Result};
pub use recoil_coeffs::{compute_coefficients, doppler_damping, mean_photons_per_pulse, DriftDiffusion};
