// `!(x > 0.0)` is used deliberately throughout as a NaN-rejecting guard;
// frozen reference constants keep every digit of their derivation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

//! Numerical laboratory for a gas-filled semi-infinite tube coupled to an
//! elastic plate at the bottom.
//!
//! The continuous problem separates over the Dirichlet eigenbasis of the
//! tube cross-section. Each mode is a 1D Klein-Gordon equation on the
//! half-line `z > 0` coupled through the bottom boundary to a scalar plate
//! oscillator. This crate provides:
//!
//! - [`eigenbasis`]: Dirichlet-Laplacian eigenvalues and eigenfunctions for
//!   the square cross-section, plus externally supplied eigenvalue tables;
//! - [`dispersion`]: the unique positive root `(omega^2, alpha)` of the
//!   coupled dispersion system per mode;
//! - [`periodic`]: closed-form time-periodic mode solutions and their
//!   residual checks;
//! - [`simulator`]: explicit second-order time stepping of the coupled
//!   mode system on a causally truncated half-line;
//! - [`energy`]: total, plate/gas split and local energies;
//! - [`decay`]: local-energy decay/non-decay experiments and the Lyapunov
//!   stability probe;
//! - [`fields`]: multi-mode assembly of the 3D fields on sample grids;
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod decay;
pub mod dispersion;
pub mod eigenbasis;
pub mod energy;
pub mod error;
pub mod fields;
pub mod periodic;
pub mod simulator;

pub use error::{Error, Result};
