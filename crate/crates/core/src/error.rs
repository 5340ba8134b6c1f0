// SPDX-License-Identifier: MIT OR Apache-2.0

use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
///
/// Series and time indices carried here are 1-based, matching how they are
/// printed to users.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Shapes or indices do not fit together.
    Dimension(String),
    /// A parameter lies outside its admissible range.
    Domain(String),
    /// The trimmed candidate set of a window is empty.
    WindowTooShort { start: usize, end: usize, trim: usize },
    /// A series carries no variation to scale by.
    Degenerate { series: Option<usize>, reason: String },
    /// An input violated a documented ordering contract.
    Contract(&'static str),
    /// The operation is not defined for the requested statistic.
    UnsupportedMode(&'static str),
    /// The threshold source failed for the window `start..=end`.
    Threshold { start: usize, end: usize, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::WindowTooShort { start, end, trim } => write!(
                f,
                "window [{start}, {end}] is too short for trim width {trim}: no candidate split points"
            ),
            Error::Degenerate { series: Some(j), reason } => {
                write!(f, "series {j} is degenerate: {reason}")
            }
            Error::Degenerate { series: None, reason } => write!(f, "degenerate input: {reason}"),
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::UnsupportedMode(msg) => write!(f, "unsupported mode: {msg}"),
            Error::Threshold { start, end, message } => {
                write!(f, "threshold for window [{start}, {end}] failed: {message}")
            }
        }
    }
}

impl core::error::Error for Error {}
