use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::grid::Field;

/// Failures reported by the solvers and analyses in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("exponential overflow: max |u| = {max_abs} exceeds {limit}")]
    Overflow { max_abs: f64, limit: f64 },

    #[error("time integration diverged at t = {time}")]
    Divergence { time: f64, last_state: Box<Field> },

    #[error("newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian at iteration {iteration} (pivot ratio {pivot_ratio:e}); likely close to a fold or bifurcation point")]
    SingularJacobian { iteration: usize, pivot_ratio: f64 },

    #[error("relaxation stalled at t = {time} with |du/dt| = {rate:e}")]
    RelaxationStalled { time: f64, rate: f64 },

    #[error("steady-state residual check failed: {residual:e} >= {tolerance:e}")]
    ResidualCheck { residual: f64, tolerance: f64 },

    #[error("symmetric eigensolver failed")]
    EigenSolver,

    #[error("numerical resolution problem: {0}")]
    Resolution(String),

    #[error("secular equation has no sign change on ({lower}, {upper})")]
    Bracket { lower: f64, upper: f64 },

    #[error("direct and secular spectra disagree by {max_deviation:e}")]
    CrosscheckMismatch {
        max_deviation: f64,
        direct: Vec<f64>,
        secular: Vec<f64>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
