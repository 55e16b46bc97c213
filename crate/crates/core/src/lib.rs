//! Core algorithms for sub-6 GHz aided mm-wave beam prediction.
//!
//! * [`chansim`] synthesizes seeded, paired sub-6 GHz / mm-wave channels from a
//!   stochastic geometric model and assembles normalized training datasets.
//! * [`beamspace`] builds the 512-beam UPA DFT codebook, evaluates spectral
//!   efficiency and runs the exhaustive-search oracle.
//! * [`tensorkit`] is a small reverse-mode differentiation engine with the
//!   regression losses, Adam, plateau scheduling and early stopping.
//! * [`brainet`] is the convolution + multi-head attention regressor.
//! * [`harness`] trains, evaluates and runs the sweep studies.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, threading and the
//! command-line tool live in the `beamnet` crate.
#![no_std]
// `num_traits::Float` supplies float math without std. Once std is anywhere in
// the crate graph its inherent methods shadow the trait and the imports look
// unused, so each of those imports carries an allow.
// Negated comparisons reject NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::too_many_arguments, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod beamspace;
pub mod brainet;
pub mod chansim;
mod error;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod tensorkit;

pub use error::{Error, Result};
