//! Integrable systems on the cotangent bundle, the Heisenberg double and the
//! quasi-Poisson double of SU(n), together with their Poisson reductions.
//!
//! Matrices are dense [`cxmat::MatC`] values. Phase-space points are
//! [`doubles::PhasePoint`]s tagged by the space they live in, and scalar
//! functions on them are [`observables::Observable`]s that know their own
//! derivatives.

pub mod brackets;
pub mod conserved;
pub mod config;
pub mod cxmat;
pub mod doubles;
pub mod error;
pub mod flows;
pub mod lie;
pub mod observables;
pub mod rmat;
pub mod sample;
pub mod verify;

pub use error::{Error, Result};
