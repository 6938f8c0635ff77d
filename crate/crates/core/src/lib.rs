// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point detection with sliding-window likelihood ratios, pattern
//! convolution and bootstrap-calibrated thresholds.

pub mod calibration;
pub mod data;
pub mod detector;
pub mod error;
pub mod experiments;
pub mod lrt;
pub mod metrics;
pub mod models;
pub mod newton;
pub mod oracles;
pub mod patterns;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
