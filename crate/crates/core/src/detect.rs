// SPDX-License-Identifier: MIT OR Apache-2.0

//! Single change-point detectors on CSS traces.
//!
//! Change points are reported as the raw arg-extremum index `n` (one-based)
//! of the detector statistic, which for a clean split lands on the last
//! observation of the first regime.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::css::{
    classical_css, constant_prefix_check, detect_orientation, reverse_sample, robust_css_with, CssTrace, Orientation,
    PrefixMode, ScaleEstimator, DEFAULT_FLAT_THRESHOLD, DEFAULT_HEAD_LEN,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Icss,
    Ols,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Icss => "ICSS",
            Method::Ols => "OLS",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "icss" => Ok(Method::Icss),
            "ols" => Ok(Method::Ols),
            other => Err(Error::Config(format!("unknown method '{other}'; expected icss or ols"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    /// One-based index in original sample order.
    pub change_point: usize,
    pub method: Method,
    pub estimator: ScaleEstimator,
    /// ICSS: `S_n` for `n = 1..=N`. OLS: `S_n` for `n = 1..=N-1`.
    /// Indexed in the order of the trace the detector ran on.
    pub statistic_trace: Vec<f64>,
    pub reversed_applied: bool,
    pub constant_prefix_fallback: bool,
    pub statistic_at_cp: f64,
    /// Orientation of the original-order trace, when it was examined.
    pub orientation: Option<Orientation>,
}

/// First index of the extremum; `better(a, b)` means `a` beats `b`.
fn arg_best(candidates: impl Iterator<Item = (usize, f64)>, better: impl Fn(f64, f64) -> bool) -> Option<(usize, f64)> {
    candidates.fold(None, |best, (n, v)| match best {
        Some((_, bv)) if !better(v, bv) => best,
        _ => Some((n, v)),
    })
}

fn result(trace: &CssTrace, method: Method, statistic_trace: Vec<f64>, cp: usize, at_cp: f64) -> DetectionResult {
    DetectionResult {
        change_point: cp,
        method,
        estimator: trace.estimator,
        statistic_trace,
        reversed_applied: false,
        constant_prefix_fallback: false,
        statistic_at_cp: at_cp,
        orientation: None,
    }
}

/// `S_n = C_n / C_N - n / N`; the change point maximizes `|S_n|` over
/// `n = 2..=N-1`.
pub fn icss_detect(trace: &CssTrace) -> Result<DetectionResult> {
    let n_total = trace.len();
    if n_total < 4 {
        return Err(Error::InsufficientLength { required: 4, actual: n_total });
    }
    let total = trace.at(n_total);
    if total == 0.0 {
        return Err(Error::ZeroTotalSumOfSquares);
    }
    let stat: Vec<f64> = (1..=n_total)
        .map(|n| if n == n_total { 0.0 } else { trace.at(n) / total - n as f64 / n_total as f64 })
        .collect();
    let (cp, _) =
        arg_best((2..n_total).map(|n| (n, stat[n - 1].abs())), |a, b| a > b).expect("nonempty candidate range");
    let at_cp = stat[cp - 1];
    Ok(result(trace, Method::Icss, stat, cp, at_cp))
}

/// Running centered moments of points `(j, C_j)` for a least-squares line.
#[derive(Debug, Clone, Copy, Default)]
struct LineFit {
    n: f64,
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl LineFit {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / self.n;
        self.mean_y += dy / self.n;
        self.sxx += dx * (x - self.mean_x);
        self.syy += dy * (y - self.mean_y);
        self.sxy += dx * (y - self.mean_y);
    }

    /// Residual sum of squares of the OLS line; zero for fewer than 3 points.
    fn ssr(&self) -> f64 {
        if self.n < 3.0 || self.sxx == 0.0 {
            return 0.0;
        }
        (self.syy - self.sxy * self.sxy / self.sxx).max(0.0)
    }
}

/// Least-squares two-line split of `(j, C_j)`. `S_n` is the combined residual
/// sum of squares of lines fit to `j <= n` and `j > n`; the change point
/// minimizes it over `n = 2..=N-2`.
pub fn ols_detect(trace: &CssTrace) -> Result<DetectionResult> {
    let n_total = trace.len();
    if n_total < 6 {
        return Err(Error::InsufficientLength { required: 6, actual: n_total });
    }
    // prefix[n] fits j = 1..=n, suffix[n] fits j = n+1..=N.
    let mut prefix = vec![0.0; n_total];
    let mut fit = LineFit::default();
    for (n, slot) in prefix.iter_mut().enumerate().skip(1) {
        fit.push(n as f64, trace.at(n));
        *slot = fit.ssr();
    }
    fit.push(n_total as f64, trace.at(n_total));
    let total_ssr = fit.ssr();
    let mut suffix = vec![0.0; n_total];
    let mut fit = LineFit::default();
    for n in (1..n_total).rev() {
        fit.push((n + 1) as f64, trace.at(n + 1));
        suffix[n] = fit.ssr();
    }
    let stat: Vec<f64> = (1..n_total).map(|n| prefix[n] + suffix[n]).collect();
    let (cp, at_cp) = ols_argmin(&stat, total_ssr);
    Ok(result(trace, Method::Ols, stat, cp, at_cp))
}

/// Minimizer of `S_n` over `n = 2..=N-2`. Values within rounding of the
/// minimum (relative to the one-line residual `total_ssr`) count as ties and
/// go to the largest index: on a continuous two-slope trace the kink point
/// lies on both lines, so the splits just before and at the kink fit exactly.
fn ols_argmin(stat: &[f64], total_ssr: f64) -> (usize, f64) {
    let n_total = stat.len() + 1;
    let (_, min) =
        arg_best((2..=n_total - 2).map(|n| (n, stat[n - 1])), |a, b| a < b).expect("nonempty candidate range");
    let tol = 1e-12 * total_ssr;
    (2..=n_total - 2).rev().find(|&n| stat[n - 1] <= min + tol).map(|n| (n, stat[n - 1])).expect("minimum is attained")
}

/// Reference OLS scan refitting both lines from scratch at every candidate.
pub fn ols_detect_naive(trace: &CssTrace) -> Result<DetectionResult> {
    let n_total = trace.len();
    if n_total < 6 {
        return Err(Error::InsufficientLength { required: 6, actual: n_total });
    }
    let fit_ssr = |range: std::ops::RangeInclusive<usize>| -> f64 {
        let pts: Vec<(f64, f64)> = range.map(|j| (j as f64, trace.at(j))).collect();
        if pts.len() < 3 {
            return 0.0;
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum()
    };
    let stat: Vec<f64> = (1..n_total).map(|n| fit_ssr(1..=n) + fit_ssr(n + 1..=n_total)).collect();
    let (cp, at_cp) = ols_argmin(&stat, fit_ssr(1..=n_total));
    Ok(result(trace, Method::Ols, stat, cp, at_cp))
}

pub fn run_detector(trace: &CssTrace, method: Method) -> Result<DetectionResult> {
    match method {
        Method::Icss => icss_detect(trace),
        Method::Ols => ols_detect(trace),
    }
}

/// Maps an index found on the reversed series back to original order.
pub fn unreverse_index(n: usize, len: usize) -> usize {
    len - n + 1
}

/// Full robust pipeline: build the trace, switch to the reversed series when
/// the trace is convex, fall back to original order when the reversed trace
/// starts flat, detect, then map the index back.
pub fn detect_with_orientation(
    values: &[f64],
    method: Method,
    estimator: ScaleEstimator,
    mode: PrefixMode,
) -> Result<DetectionResult> {
    traced_orientation(values, method, estimator, mode).map(|(_, r)| r)
}

fn traced_orientation(
    values: &[f64],
    method: Method,
    estimator: ScaleEstimator,
    mode: PrefixMode,
) -> Result<(CssTrace, DetectionResult)> {
    if values.len() < 8 {
        return Err(Error::InsufficientLength { required: 8, actual: values.len() });
    }
    let forward = robust_css_with(values, estimator, mode)?;
    let orientation = detect_orientation(&forward)?;
    let mut fallback = false;
    let chosen = if orientation == Orientation::Convex {
        let mut backward = robust_css_with(&reverse_sample(values), estimator, mode)?;
        backward.reversed = true;
        if constant_prefix_check(&backward, DEFAULT_HEAD_LEN, DEFAULT_FLAT_THRESHOLD)? {
            fallback = true;
            forward
        } else {
            backward
        }
    } else {
        forward
    };
    let mut res = run_detector(&chosen, method)?;
    res.orientation = Some(orientation);
    res.constant_prefix_fallback = fallback;
    if chosen.reversed {
        res.reversed_applied = true;
        res.change_point = unreverse_index(res.change_point, values.len());
    }
    Ok((chosen, res))
}

/// A detector paired with the estimator feeding its CSS trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub method: Method,
    pub estimator: ScaleEstimator,
}

impl Detector {
    pub fn new(method: Method, estimator: ScaleEstimator) -> Self {
        Self { method, estimator }
    }

    /// Label such as `ICSS` or `OLS[QCV]`.
    pub fn label(&self) -> String {
        match self.estimator.tag() {
            "" => self.method.to_string(),
            tag => format!("{}[{tag}]", self.method),
        }
    }

    /// Baseline detectors run on the classical trace as is; robust ones go
    /// through the orientation pipeline.
    pub fn detect(&self, values: &[f64]) -> Result<DetectionResult> {
        self.detect_with_mode(values, PrefixMode::Incremental)
    }

    pub fn detect_with_mode(&self, values: &[f64], mode: PrefixMode) -> Result<DetectionResult> {
        self.detect_traced(values, mode).map(|(_, r)| r)
    }

    /// Also returns the trace the detector ran on (reversed when the
    /// orientation step flipped the series).
    pub fn detect_traced(&self, values: &[f64], mode: PrefixMode) -> Result<(CssTrace, DetectionResult)> {
        if self.estimator.is_robust() {
            traced_orientation(values, self.method, self.estimator, mode)
        } else {
            let trace = classical_css(values)?;
            let res = run_detector(&trace, self.method)?;
            Ok((trace, res))
        }
    }
}
