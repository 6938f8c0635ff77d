// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate window: {0}")]
    DegenerateWindow(String),
    #[error("position {position} outside admissible range [{low}, {high}]")]
    OutOfRange { position: usize, low: usize, high: usize },
    #[error("series too short: n = {n}, need at least {required}")]
    SeriesTooShort { n: usize, required: usize },
    #[error("calibration aborted: {reruns} replicate reruns out of {replicates} exceed the 20% budget")]
    TooManyFailures { reruns: usize, replicates: usize },
    #[error("stream detector has no frozen thresholds")]
    Uncalibrated,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by bad input or configuration rather than by
    /// a failure during computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::TooManyFailures { .. } | Error::Uncalibrated)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
