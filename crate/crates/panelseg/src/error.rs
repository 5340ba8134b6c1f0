// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] panelseg_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row}, column {column}: {message}")]
    Cell {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Plan {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for bad input or usage, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) => match e {
                panelseg_core::Error::Dimension(_)
                | panelseg_core::Error::Domain(_)
                | panelseg_core::Error::WindowTooShort { .. }
                | panelseg_core::Error::UnsupportedMode(_) => 2,
                _ => 1,
            },
            Error::Io { .. }
            | Error::Cell { .. }
            | Error::Input { .. }
            | Error::Plan { .. }
            | Error::Config(_)
            | Error::Csv(_) => 2,
            Error::Json(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
