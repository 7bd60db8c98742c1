// SPDX-License-Identifier: MIT OR Apache-2.0

//! Offline detection of a single scale change in heavy-tailed or spiky series.
//!
//! Two classical detectors, ICSS and the two-line least-squares split, read a
//! cumulative-sum-of-squares trace. Replacing the prefix variance and mean in
//! that trace with the biweight midvariance or the quantile conditional
//! variance and the median makes both detectors usable on infinite-variance
//! data. The crate also ships the synthetic generators and the Monte Carlo
//! harness used to compare the variants.

pub mod bench;
pub mod css;
pub mod detect;
pub mod error;
pub mod estimators;
pub mod order_stats;
pub mod series;
pub mod simulate;

pub use css::{CssTrace, Orientation, PrefixMode, ScaleEstimator};
pub use detect::{DetectionResult, Detector, Method};
pub use error::{Error, Result};
pub use estimators::{BmidConfig, QcvBounds, Sample};
