//! Std companion to `beamnet-core`: binary file formats, config files, CSV
//! and JSON emission, a rayon-backed executor and the `beamnet` CLI.

pub mod cli;
pub mod config;
pub mod csvout;
mod error;
pub mod format;
pub mod manifest;
pub mod pool;

pub use error::{Error, Result};
