//! Spectra of the one-dimensional Dirichlet operator `-d²/dx² + V` with a
//! bounded potential, exact canonical and grand-canonical partition functions
//! of free fermions in those levels, and convergence sweeps comparing the
//! perturbed system with the free gas at high density.
//!
//! Units: `ℏ = 2m = 1`.

// `!(x > y)` is used deliberately so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod ensembles;
pub mod error;
pub mod export;
pub mod potentials;
pub mod spectrum;

pub use error::{Error, Result};
pub use potentials::PotentialSpec;
pub use spectrum::{Grid, GridPolicy, SpectralProblem, Spectrum};
