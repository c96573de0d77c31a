//! Numerics for the nonlocal reaction-diffusion equation
//!
//! ```text
//! u_t = D u_xx - u + kappa e^u / ∫ e^u
//! ```
//!
//! on the periodic unit interval: time stepping, stationary solutions,
//! linear stability, and branch continuation.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command
//! line tool live in the companion `mechpattern-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod basis;
pub mod bifurcation;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod grid;
mod linalg;
pub mod random;
pub mod stability;
pub mod steady;

/// Crate version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use energy::{bounds, energy, first_variation, hessian_matrix, BoundsReport, ModelParams};
pub use error::{Error, Result};
pub use grid::{
    from_spectral, integrate, laplacian_eigenvalue, second_derivative, to_spectral, Field, Grid,
    Spectrum,
};
