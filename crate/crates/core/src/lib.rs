//! Exact simulation and closed-form analytics for the continuum Pólya-like
//! random walk.
//!
//! The walk lives in `R^c`. A master clock rings after an exponential waiting
//! time whose rate is the current coordinate sum; the coordinate that fires is
//! chosen with probability proportional to its value, and row `i` of the
//! navigation matrix (constants or random variables) is added to the position.
//!
//! The crate is `no_std` and only needs `alloc`:
//!
//! - [`model`]: navigation matrices, initial states, scheme classification.
//! - [`simulate`]: the event-driven sampler, ensembles and mergeable moment
//!   accumulators.
//! - [`analytic`]: closed-form moment generating functions, moments,
//!   transition probabilities and limit laws.
//! - [`numerics`]: Lambert W, matrix exponential, special functions, RK4
//!   oracles and the finite-difference PDE residual.
//! - [`verify`]: statistical and numerical cross-checks producing a
//!   [`verify::VerificationReport`].
//!
//! IO, configuration files and parallel execution live in the `polya-cli`
//! crate.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose so that NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
mod error;
pub mod model;
pub mod numerics;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
