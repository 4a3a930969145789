//! Very weak norms, generalized Ehrling inequalities and their certificates
//! on finite truncations of separable sequence spaces.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the scenario
//! runner and the command line live in the companion `ehrling-lab` crate.
//!
//! Module map:
//!
//! - [`spaces`]: truncated elements, concrete norms, dual pairings and the
//!   deterministic dual-family enumerators `k -> phi_k`.
//! - [`veryweak`]: the series `|u|_Phi = sum_k 2^-k |<phi_k, u>|` evaluated as a
//!   certified enclosure.
//! - [`operators`]: a small gallery of linear operators with known
//!   complete-continuity behaviour.
//! - [`ehrling`]: moduli `delta_eps`, constants `C_eps = eps / delta_eps`, sharp
//!   constants, verification and falsification.
//! - [`convergence`]: canonical sequences, convergence-mode classification and
//!   the construction separating very weak from weak convergence.
//! - [`linalg`]: the handful of dense kernels the above need.

#![no_std]
#![warn(missing_docs)]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod convergence;
pub mod ehrling;
mod error;
pub mod linalg;
pub mod operators;
pub mod optimize;
pub mod spaces;
pub mod veryweak;

pub use error::{Error, Result};
pub use spaces::{DualFamily, Element, FamilyMode, Functional, NormSpec};
pub use veryweak::CertifiedValue;

/// Absolute tolerance used for floating comparisons unless an operation
/// states its own.
pub const ABS_TOL: f64 = 1e-10;
