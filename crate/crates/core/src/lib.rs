//! Finite-dimensional simulator of quantum measurement chains in which every
//! event carries a dual state: a dynamical component that always evolves
//! unitarily, and one informational pointer record per observer that is
//! sampled stochastically when that observer finishes interacting.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, event logs and
//! the command line front end live in the `dualstate` companion crate.
//!
//! Modules, bottom up:
//!
//! * [`hilbert`]: dense complex linear algebra over labeled tensor-product spaces.
//! * [`model`]: measurement scenarios, premeasurement and reversal unitaries,
//!   discriminating observables.
//! * [`dual`]: the event-state engine and its restricted states.
//! * [`experiments`]: gedanken-experiment harness producing claim verdicts.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dual;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod model;

pub use error::{Error, Result};

/// Tolerance for norm, trace, hermiticity, unitarity and projector checks.
pub const EPS_NORM: f64 = 1e-9;

/// Tolerance for entry-wise agreement with brute-force oracles.
pub const EPS_ORACLE: f64 = 1e-12;

/// Block-norm threshold below which a Hamiltonian is treated as not coupling
/// two pointer branches.
pub const EPS_BRANCH: f64 = 1e-10;
