// SPDX-License-Identifier: MIT OR Apache-2.0

//! Classical and robust location/scale estimators.
//!
//! Every function takes a plain slice and expects finite values; use
//! [`Sample`] to validate untrusted input once at the boundary. The robust
//! scale estimators are the biweight midvariance ([`bmid_variance`]) and the
//! quantile conditional variance ([`qcv_variance`]). Neither carries a
//! consistency factor: detectors only need scale up to a constant multiple.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated, nonempty sequence of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Observations in reverse order.
    pub fn reversed(&self) -> Sample {
        Sample(self.0.iter().rev().copied().collect())
    }
}

impl Deref for Sample {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Sample::new(values)
    }
}

/// Tuning constant of the biweight midvariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmidConfig {
    c: f64,
}

impl BmidConfig {
    pub const DEFAULT_C: f64 = 9.0;

    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(Self { c })
        } else {
            Err(Error::InvalidTuning(c))
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

impl Default for BmidConfig {
    fn default() -> Self {
        Self { c: Self::DEFAULT_C }
    }
}

/// Quantile levels `0 < a < b < 1` bounding the window of order statistics
/// used by [`qcv_variance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcvBounds {
    a: f64,
    b: f64,
}

impl QcvBounds {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a > 0.0 && a < b && b < 1.0 {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidBounds { a, b })
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Zero-based half-open range `[floor(n*a), floor(n*b))` of order
    /// statistics, i.e. one-based indices `floor(n*a)+1 ..= floor(n*b)`.
    pub fn window(&self, n: usize) -> Result<(usize, usize)> {
        let lo = floor_product(n, self.a);
        let hi = floor_product(n, self.b);
        if hi < lo + 2 {
            return Err(Error::WindowTooSmall { lo, hi });
        }
        Ok((lo, hi))
    }
}

impl Default for QcvBounds {
    fn default() -> Self {
        Self { a: 0.1, b: 0.9 }
    }
}

/// `floor(n * q)`, snapping products that land within rounding distance of an
/// integer so that e.g. `100 * 0.29` gives 29 rather than 28.
fn floor_product(n: usize, q: f64) -> usize {
    let t = n as f64 * q;
    let r = t.round();
    if (t - r).abs() <= 1e-9 * t.max(1.0) {
        r as usize
    } else {
        t.floor() as usize
    }
}

pub fn sample_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Unbiased sample variance (divisor `n - 1`).
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientLength { required: 2, actual: values.len() });
    }
    let mean = sample_mean(values)?;
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(ss / (values.len() - 1) as f64)
}

pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    (lo + hi) / 2.0
}

/// Median of an already sorted slice.
pub(crate) fn sorted_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        midpoint(sorted[n / 2 - 1], sorted[n / 2])
    }
}

pub(crate) fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted
}

pub fn sample_median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(sorted_median(&sorted_copy(values)))
}

/// Raw median absolute deviation from the median, without the 1.4826
/// normal-consistency factor.
pub fn mad(values: &[f64]) -> Result<f64> {
    let med = sample_median(values)?;
    Ok(mad_about(values, med))
}

pub(crate) fn mad_about(values: &[f64], med: f64) -> f64 {
    let dev: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    sorted_median(&sorted_copy(&dev))
}

/// Biweight midvariance.
///
/// Observations with `|u| >= 1`, where `u = (x - median) / (c * MAD)`, get
/// zero weight but still count towards the leading factor `n`.
pub fn bmid_variance(values: &[f64], cfg: BmidConfig) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientLength { required: 2, actual: values.len() });
    }
    let med = sample_median(values)?;
    let mad = mad_about(values, med);
    bmid_with_center(values, med, mad, cfg.c())
}

/// Biweight sum given a precomputed median and MAD. Shared by the one-shot
/// estimator and the prefix scan so both produce identical bits.
pub(crate) fn bmid_with_center(values: &[f64], med: f64, mad: f64, c: f64) -> Result<f64> {
    if mad == 0.0 {
        return Err(Error::DegenerateScale);
    }
    let scale = c * mad;
    let mut num = 0.0;
    let mut den = 0.0;
    for &x in values {
        let d = x - med;
        let u = d / scale;
        if u.abs() < 1.0 {
            let u2 = u * u;
            let w = 1.0 - u2;
            let w2 = w * w;
            num += d * d * (w2 * w2);
            den += w * (1.0 - 5.0 * u2);
        }
    }
    if den == 0.0 {
        return Err(Error::DegenerateScale);
    }
    Ok(values.len() as f64 * num / (den * den))
}

/// Sample quantile conditional variance: the population variance of the
/// order statistics with one-based ranks `floor(n*a)+1 ..= floor(n*b)`.
pub fn qcv_variance(values: &[f64], bounds: QcvBounds) -> Result<f64> {
    let (lo, hi) = bounds.window(values.len())?;
    let sorted = sorted_copy(values);
    Ok(window_variance(&sorted[lo..hi]))
}

/// Two-pass population variance of a window.
pub(crate) fn window_variance(window: &[f64]) -> f64 {
    let m = window.len() as f64;
    let mean = window.iter().sum::<f64>() / m;
    window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m
}
