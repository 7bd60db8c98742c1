// SPDX-License-Identifier: MIT OR Apache-2.0

//! Cumulative-sum-of-squares traces.
//!
//! The classical trace is `C_n = x_1^2 + ... + x_n^2`. Writing it through the
//! prefix mean and unbiased variance gives `C_n = n (var_n + mean_n^2) - var_n`;
//! the robust trace keeps that shape but swaps in a robust variance and the
//! prefix median.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    bmid_variance, bmid_with_center, qcv_variance, sample_median, sample_variance, BmidConfig, QcvBounds,
};
use crate::order_stats::OrderStatIndex;

/// Scale estimator plugged into the CSS statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScaleEstimator {
    Classical,
    Bmid(BmidConfig),
    Qcv(QcvBounds),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Mean,
    Median,
}

impl ScaleEstimator {
    /// Robust estimators pair with the median, the classical one with the mean.
    pub fn location(&self) -> Location {
        match self {
            ScaleEstimator::Classical => Location::Mean,
            ScaleEstimator::Bmid(_) | ScaleEstimator::Qcv(_) => Location::Median,
        }
    }

    pub fn is_robust(&self) -> bool {
        !matches!(self, ScaleEstimator::Classical)
    }

    /// Short tag used in method labels such as `ICSS[BMID]`.
    pub fn tag(&self) -> &'static str {
        match self {
            ScaleEstimator::Classical => "",
            ScaleEstimator::Bmid(_) => "BMID",
            ScaleEstimator::Qcv(_) => "QCV",
        }
    }

    fn min_len(&self) -> usize {
        if self.is_robust() {
            3
        } else {
            1
        }
    }
}

/// How prefix estimates are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrefixMode {
    /// Order-statistic index updated once per observation.
    #[default]
    Incremental,
    /// Every prefix recomputed from scratch. Reference implementation.
    ExactNaive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Concave,
    Convex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CssTrace {
    /// `C_n` for `n = 1..=N`, stored zero-based.
    pub values: Vec<f64>,
    pub estimator: ScaleEstimator,
    /// Whether the trace was computed on the reversed series.
    pub reversed: bool,
    /// Prefixes whose robust variance was undefined (zero MAD or a quantile
    /// window under two points) and was taken as zero.
    pub degenerate_prefixes: usize,
}

impl CssTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `C_n` with one-based `n`.
    pub fn at(&self, n: usize) -> f64 {
        self.values[n - 1]
    }
}

fn combine(n: usize, variance: f64, location: f64) -> f64 {
    let n = n as f64;
    n * (variance + location * location) - variance
}

pub fn classical_css(values: &[f64]) -> Result<CssTrace> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let values = values
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x * x;
            Some(*acc)
        })
        .collect();
    Ok(CssTrace { values, estimator: ScaleEstimator::Classical, reversed: false, degenerate_prefixes: 0 })
}

pub fn robust_css(values: &[f64], estimator: ScaleEstimator) -> Result<CssTrace> {
    robust_css_with(values, estimator, PrefixMode::Incremental)
}

/// Robust CSS trace, with `C_1 = x_1^2` and
/// `C_n = n (var_n + med_n^2) - var_n` for `n >= 2`.
pub fn robust_css_with(values: &[f64], estimator: ScaleEstimator, mode: PrefixMode) -> Result<CssTrace> {
    let need = estimator.min_len();
    if values.len() < need {
        return Err(Error::InsufficientLength { required: need, actual: values.len() });
    }
    match mode {
        PrefixMode::Incremental => incremental(values, estimator),
        PrefixMode::ExactNaive => naive(values, estimator),
    }
}

/// Robust variance for a prefix, or `None` when it is undefined.
fn undefined_as_none(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateScale | Error::WindowTooSmall { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn naive(values: &[f64], estimator: ScaleEstimator) -> Result<CssTrace> {
    let mut out = Vec::with_capacity(values.len());
    let mut degenerate = 0;
    out.push(values[0] * values[0]);
    for n in 2..=values.len() {
        let prefix = &values[..n];
        let (variance, location) = match estimator {
            ScaleEstimator::Classical => (sample_variance(prefix)?, crate::estimators::sample_mean(prefix)?),
            ScaleEstimator::Bmid(cfg) => {
                let med = sample_median(prefix)?;
                let v = undefined_as_none(bmid_variance(prefix, cfg))?;
                degenerate += usize::from(v.is_none());
                (v.unwrap_or(0.0), med)
            }
            ScaleEstimator::Qcv(bounds) => {
                let med = sample_median(prefix)?;
                let v = undefined_as_none(qcv_variance(prefix, bounds))?;
                degenerate += usize::from(v.is_none());
                (v.unwrap_or(0.0), med)
            }
        };
        out.push(combine(n, variance, location));
    }
    Ok(CssTrace { values: out, estimator, reversed: false, degenerate_prefixes: degenerate })
}

fn incremental(values: &[f64], estimator: ScaleEstimator) -> Result<CssTrace> {
    let mut out = Vec::with_capacity(values.len());
    out.push(values[0] * values[0]);
    let mut degenerate = 0;
    match estimator {
        ScaleEstimator::Classical => {
            // Welford running mean and centered sum of squares.
            let (mut mean, mut m2) = (values[0], 0.0);
            for (i, &x) in values.iter().enumerate().skip(1) {
                let n = i + 1;
                let delta = x - mean;
                mean += delta / n as f64;
                m2 += delta * (x - mean);
                out.push(combine(n, m2 / (n - 1) as f64, mean));
            }
        }
        ScaleEstimator::Bmid(cfg) => {
            let mut index = OrderStatIndex::new(values);
            index.insert(0);
            for n in 2..=values.len() {
                index.insert(n - 1);
                let med = index.median();
                let mad = index.median_abs_deviation(med);
                let v = undefined_as_none(bmid_with_center(&values[..n], med, mad, cfg.c()))?;
                degenerate += usize::from(v.is_none());
                out.push(combine(n, v.unwrap_or(0.0), med));
            }
        }
        ScaleEstimator::Qcv(bounds) => {
            let mut index = OrderStatIndex::new(values);
            index.insert(0);
            for n in 2..=values.len() {
                index.insert(n - 1);
                let med = index.median();
                let v = match bounds.window(n) {
                    Ok((lo, hi)) => index.window_variance(lo, hi),
                    Err(_) => {
                        degenerate += 1;
                        0.0
                    }
                };
                out.push(combine(n, v, med));
            }
        }
    }
    Ok(CssTrace { values: out, estimator, reversed: false, degenerate_prefixes: degenerate })
}

/// Concave when more interior points lie strictly above the chord through
/// `(2, C_2)` and `(N-1, C_{N-1})` than below it; ties count as convex.
pub fn detect_orientation(trace: &CssTrace) -> Result<Orientation> {
    let n_total = trace.len();
    if n_total < 4 {
        return Err(Error::InsufficientLength { required: 4, actual: n_total });
    }
    let (x0, y0) = (2.0, trace.at(2));
    let (x1, y1) = ((n_total - 1) as f64, trace.at(n_total - 1));
    let slope = (y1 - y0) / (x1 - x0);
    let (mut above, mut below) = (0usize, 0usize);
    for n in 2..n_total {
        let chord = y0 + slope * (n as f64 - x0);
        let c = trace.at(n);
        if c > chord {
            above += 1;
        } else if c < chord {
            below += 1;
        }
    }
    Ok(if above > below { Orientation::Concave } else { Orientation::Convex })
}

pub const DEFAULT_HEAD_LEN: usize = 6;
pub const DEFAULT_FLAT_THRESHOLD: f64 = 0.05;

/// True when the trace starts out roughly flat: fewer than `threshold` of the
/// interior points exceed the mean of `C_2..=C_{head_len+1}`.
pub fn constant_prefix_check(trace: &CssTrace, head_len: usize, threshold: f64) -> Result<bool> {
    let n_total = trace.len();
    if head_len == 0 || n_total < head_len + 2 {
        return Err(Error::InsufficientLength { required: head_len.max(1) + 2, actual: n_total });
    }
    let head = &trace.values[1..=head_len];
    let omega = head.iter().sum::<f64>() / head_len as f64;
    let exceed = (2..n_total).filter(|&n| trace.at(n) > omega).count();
    Ok((exceed as f64 / (n_total - 2) as f64) < threshold)
}

pub fn reverse_sample(values: &[f64]) -> Vec<f64> {
    values.iter().rev().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::sample_mean;
    use proptest::prelude::*;

    fn trace(values: Vec<f64>) -> CssTrace {
        CssTrace { values, estimator: ScaleEstimator::Classical, reversed: false, degenerate_prefixes: 0 }
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_css(&[1.0, 2.0, 3.0]).unwrap().values, vec![1.0, 5.0, 14.0]);
        assert_eq!(classical_css(&[0.0; 3]).unwrap().values, vec![0.0; 3]);
        assert_eq!(classical_css(&[-2.0, 2.0]).unwrap().values, vec![4.0, 8.0]);
        assert_eq!(classical_css(&[]), Err(Error::EmptySample));
    }

    #[test]
    fn constant_series_with_qcv_is_n_times_median_squared() {
        let b = QcvBounds::new(0.25, 0.75).unwrap();
        for mode in [PrefixMode::Incremental, PrefixMode::ExactNaive] {
            let t = robust_css_with(&[1.0; 4], ScaleEstimator::Qcv(b), mode).unwrap();
            assert_eq!(t.values, vec![1.0, 2.0, 3.0, 4.0]);
        }
    }

    #[test]
    fn constant_prefix_under_bmid_is_flagged_not_fatal() {
        let x = [2.0, 2.0, 2.0, 2.0, 5.0, -1.0, 3.0];
        let inc = robust_css(&x, ScaleEstimator::Bmid(BmidConfig::default())).unwrap();
        let nai = robust_css_with(&x, ScaleEstimator::Bmid(BmidConfig::default()), PrefixMode::ExactNaive).unwrap();
        assert!(inc.degenerate_prefixes >= 3);
        assert_eq!(inc.degenerate_prefixes, nai.degenerate_prefixes);
        assert_eq!(&inc.values[..4], &[4.0, 8.0, 12.0, 16.0]);
    }

    #[test]
    fn robust_requires_three_points() {
        let e = robust_css(&[1.0, 2.0], ScaleEstimator::Qcv(QcvBounds::default()));
        assert!(matches!(e, Err(Error::InsufficientLength { required: 3, .. })));
    }

    #[test]
    fn orientation_examples() {
        let sqrt: Vec<f64> = (1..=50).map(|n| (n as f64).sqrt()).collect();
        assert_eq!(detect_orientation(&trace(sqrt)).unwrap(), Orientation::Concave);
        let sq: Vec<f64> = (1..=50).map(|n| (n * n) as f64).collect();
        assert_eq!(detect_orientation(&trace(sq)).unwrap(), Orientation::Convex);
        let lin: Vec<f64> = (1..=50).map(|n| 3.0 * n as f64).collect();
        assert_eq!(detect_orientation(&trace(lin)).unwrap(), Orientation::Convex);
        assert!(detect_orientation(&trace(vec![1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn constant_prefix_examples() {
        let mut flat = vec![0.0];
        flat.extend([5.0; 6]);
        flat.extend((0..30).rev().map(|k| k as f64 / 10.0));
        assert!(constant_prefix_check(&trace(flat), DEFAULT_HEAD_LEN, DEFAULT_FLAT_THRESHOLD).unwrap());
        let rising: Vec<f64> = (1..=40).map(f64::from).collect();
        assert!(!constant_prefix_check(&trace(rising), DEFAULT_HEAD_LEN, DEFAULT_FLAT_THRESHOLD).unwrap());
        assert!(constant_prefix_check(&trace(vec![1.0; 7]), 6, 0.05).is_err());
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(reverse_sample(&[1.0, 2.0, 3.0]), vec![3.0, 2.0, 1.0]);
        assert_eq!(reverse_sample(&[1.0, 2.0, 1.0]), vec![1.0, 2.0, 1.0]);
    }

    proptest! {
        #[test]
        fn classical_trace_matches_mean_variance_identity(
            x in prop::collection::vec(-1e3..1e3f64, 2..100)
        ) {
            let c = classical_css(&x).unwrap();
            for n in 2..=x.len() {
                let p = &x[..n];
                let (v, m) = (sample_variance(p).unwrap(), sample_mean(p).unwrap());
                let rhs = combine(n, v, m);
                prop_assert!((c.at(n) - rhs).abs() <= 1e-9 * c.at(n).max(1.0));
            }
        }

        #[test]
        fn classical_trace_nondecreasing(x in prop::collection::vec(-1e3..1e3f64, 1..100)) {
            let c = classical_css(&x).unwrap();
            prop_assert!(c.values.windows(2).all(|w| w[1] >= w[0]));
            let total: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!((c.values[x.len() - 1] - total).abs() <= 1e-12 * total.max(1.0));
        }

        #[test]
        fn classical_spec_bridges_both_routes(x in prop::collection::vec(-50.0..50.0f64, 3..150)) {
            let a = classical_css(&x).unwrap();
            let b = robust_css(&x, ScaleEstimator::Classical).unwrap();
            for (p, q) in a.values.iter().zip(&b.values) {
                prop_assert!((p - q).abs() <= 1e-9 * p.abs().max(1.0));
            }
        }

        #[test]
        fn antisymmetric_samples_give_sign_invariant_robust_traces(
            half in prop::collection::vec(0.1..10.0f64, 2..40),
            qcv in any::<bool>(),
        ) {
            // Interleaving +v, -v keeps every even prefix symmetric about 0.
            let x: Vec<f64> = half.iter().flat_map(|&v| [v, -v]).collect();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let est = if qcv { ScaleEstimator::Qcv(QcvBounds::default()) } else { ScaleEstimator::Bmid(BmidConfig::default()) };
            let a = robust_css(&x, est).unwrap();
            let b = robust_css(&neg, est).unwrap();
            for n in (2..=x.len()).step_by(2) {
                prop_assert!((a.at(n) - b.at(n)).abs() <= 1e-9 * a.at(n).abs().max(1.0));
            }
        }
    }
}
