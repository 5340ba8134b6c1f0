// SPDX-License-Identifier: MIT OR Apache-2.0

//! Double CUSUM change-point statistics for high-dimensional panel data.
//!
//! This crate is `no_std` (it needs `alloc`) and holds the pure numerical
//! parts of the detector: the CUSUM and double CUSUM operators, the
//! `(b, m)` scan, long-run variance scaling, the binary segmentation driver
//! and the competitor statistics used for benchmarking. Resampling, file
//! formats and the command line live in the `panelseg` crate.
//!
//! Time indices follow one convention throughout: a window is a half-open
//! range `start..end` of 0-based columns, and a split point `b` separates
//! `start..b` from `b..end`. Read as a 1-based index, `b` is the last time
//! point of the left segment, which is how change-points are reported.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod config;
pub mod cusum;
pub mod dcbs;
mod error;
mod math;
pub mod panel;
pub mod quantile;
pub mod reference;
pub mod scaling;
pub mod special;

pub use config::{DetectorConfig, WindowRule};
pub use cusum::{
    cusum_series, dc_scan, double_cusum, ordered_abs_cusums, projection_vector, CusumScanResult,
    DcMode, OrderedCusums, Scanner,
};
pub use dcbs::{
    dcbs_run, post_process, ChangePoint, FixedThreshold, ChangePointReport, SegmentNode, ThresholdSource, Verdict,
};
pub use error::{Error, Result};
pub use panel::{standardize, PanelData, ScaledPanel};
pub use scaling::{estimate_residuals, estimate_scales, flat_top_weight, long_run_variance, ScalingEstimate};
