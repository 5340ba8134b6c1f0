// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point detection in high-dimensional panels with the double
//! CUSUM binary segmentation.
//!
//! The numerical kernels live in [`panelseg_core`]; this crate adds the
//! bootstrap test criteria, the end-to-end [`detect`] pipeline, panel CSV
//! files, JSON reports, the Monte Carlo harness and the `panelseg` binary.

pub mod bootstrap;
pub mod cli;
pub mod detect;
mod error;
pub mod io;
pub mod report;
pub mod simgen;

pub use detect::{detect, Detection};
pub use error::{Error, Result};
pub use panelseg_core as core;
