//! Coarse-grained ellipticity for degenerate and singular coefficient fields.
//!
//! The crate is `no_std` (with `alloc`). It holds every numerical piece:
//! the triadic cube hierarchy and piecewise-constant matrix fields, the
//! example field generators, a discrete solver for Dirichlet and Neumann
//! cell problems, the per-cube coarse-grained matrices `a_*(Q)` and
//! `a(Q; max)`, the multiscale constants `Λ_s`, `λ_t`, `Θ_{s,t}`, discrete
//! Besov-type norms, and the regularity experiments built on top of them.
//!
//! File formats, on-disk caching, parallel sweeps and the command line live
//! in the `cge` companion crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod besov;
pub mod coarse;
mod error;
pub mod generators;
pub mod grid;
pub mod harness;
pub mod interp;
pub mod math;
pub mod rng;
pub mod solver;
pub mod symmat;

pub use error::{Error, Result};
pub use grid::{CoefficientField, GridSpec, GridMode, ScalarGridFunction, TriadicCube};
pub use symmat::SymMat;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// `c_s = 1 - 3^{-s}`, the normalisation making `c_s Σ_{n≥0} 3^{-sn} = 1`.
#[inline]
pub fn c_s(s: f64) -> f64 {
    1.0 - math::pow3(-s)
}
