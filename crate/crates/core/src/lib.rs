//! Nonlocal Allen-Cahn phase transitions on uniform grids.
//!
//! The crate revolves around the energy
//!
//! ```text
//!   E(u; O) = K(u; O) + W(u; O)
//! ```
//!
//! where `K` is a fractional (long-range) interaction energy driven by the
//! kernel `|z|^-(n+2s)` and `W` integrates a multi-well potential, possibly
//! modulated by a periodic medium. On top of the energies sit a projected
//! gradient minimizer, the 1D transition layer, planelike minimizers on
//! quotient cylinders (n = 2), multibump orbits for periodically modulated
//! multiwell potentials (n = 1), and scaling experiments.
//!
//! Everything is deterministic: fixed-order reductions, seeded RNG, no
//! wall-clock dependence in any numeric path.

pub mod conv;
pub mod energy;
pub mod experiments;
pub mod grid;
pub mod kernel;
pub mod layer;
pub mod minimize;
pub mod multibump;
pub mod planelike;
pub mod potential;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("incommensurate: {0}")]
    Incommensurate(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("infeasible input: {0}")]
    Infeasible(String),

    #[error("line search failed after {halvings} halvings at iteration {iteration}")]
    LineSearchFailed { iteration: usize, halvings: usize },

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations (tolerance {tolerance:.3e})")]
    Unconverged {
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    #[error("restart energies spread {spread:.3e} exceeds cluster tolerance {tolerance:.3e}")]
    EnergySpread { spread: f64, tolerance: f64 },

    #[error("segment {segment} lost after constraint release: sup distance {distance:.3e} to well {well}")]
    SegmentLost {
        segment: usize,
        well: i64,
        distance: f64,
    },

    #[error("no clean interval of length {length} at flatness {flatness:.3e}")]
    NoCleanInterval { length: f64, flatness: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

fn err_param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
