// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo harness: detection error tables, boxplot summaries and
//! wall-time scaling.
//!
//! Every trial series is generated from a seed derived from
//! `(base_seed, grid point, trial)`, where the grid point identifier hashes
//! the generator parameters themselves. Reordering or subsetting a grid
//! therefore never changes an individual trial.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::css::ScaleEstimator;
use crate::detect::{Detector, Method};
use crate::error::{Error, Result};
use crate::estimators::{BmidConfig, QcvBounds};
use crate::series::fmt_f64;
use crate::simulate::{derive_seed, gen_mixture_series, gen_stable_series, MixtureSpec, StableSpec, SyntheticSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Scenario {
    Stable { alpha: f64, gamma1: f64, gamma2: f64 },
    Mixture { omega2: f64, nu: f64, p: f64 },
}

impl Scenario {
    pub fn stable(alpha: f64, gamma2: f64) -> Self {
        Scenario::Stable { alpha, gamma1: 1.0, gamma2 }
    }

    pub fn mixture(omega2: f64, nu: f64, p: f64) -> Self {
        Scenario::Mixture { omega2, nu, p }
    }

    fn fingerprint(&self) -> [u64; 4] {
        match *self {
            Scenario::Stable { alpha, gamma1, gamma2 } => [1, alpha.to_bits(), gamma1.to_bits(), gamma2.to_bits()],
            Scenario::Mixture { omega2, nu, p } => [2, omega2.to_bits(), nu.to_bits(), p.to_bits()],
        }
    }
}

/// One generator setting at one series length, change point in the middle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub scenario: Scenario,
    pub len: usize,
    pub cp: usize,
}

impl GridPoint {
    pub fn new(scenario: Scenario, len: usize) -> Self {
        Self { scenario, len, cp: len / 2 }
    }

    /// Identifier derived from the parameters only.
    pub fn id(&self) -> u64 {
        let mut path = self.scenario.fingerprint().to_vec();
        path.extend([self.len as u64, self.cp as u64]);
        derive_seed(0, &path)
    }

    pub fn trial_seed(&self, base_seed: u64, trial: usize) -> u64 {
        derive_seed(base_seed, &[self.id(), trial as u64])
    }

    /// Index a detector should report for a perfect split: the last
    /// observation of regime 1.
    pub fn truth(&self) -> usize {
        self.cp - 1
    }

    pub fn generate(&self, seed: u64) -> Result<SyntheticSeries> {
        match self.scenario {
            Scenario::Stable { alpha, gamma1, gamma2 } => {
                gen_stable_series(&StableSpec { alpha, gamma1, gamma2, len: self.len, cp: self.cp, seed })
            }
            Scenario::Mixture { omega2, nu, p } => {
                gen_mixture_series(&MixtureSpec { omega2, nu, p, len: self.len, cp: self.cp, seed })
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self.scenario {
            Scenario::Stable { alpha, gamma1, gamma2 } => {
                StableSpec { alpha, gamma1, gamma2, len: self.len, cp: self.cp, seed: 0 }.validate()
            }
            Scenario::Mixture { omega2, nu, p } => {
                MixtureSpec { omega2, nu, p, len: self.len, cp: self.cp, seed: 0 }.validate()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenarios: Vec<Scenario>,
    pub lengths: Vec<usize>,
    pub detectors: Vec<Detector>,
    pub trials: usize,
    pub base_seed: u64,
}

/// The six detectors in table order: ICSS, ICSS[BMID], ICSS[QCV], OLS,
/// OLS[BMID], OLS[QCV].
pub fn all_detectors(bmid: BmidConfig, qcv: QcvBounds) -> Vec<Detector> {
    [Method::Icss, Method::Ols]
        .into_iter()
        .flat_map(|m| {
            [ScaleEstimator::Classical, ScaleEstimator::Bmid(bmid), ScaleEstimator::Qcv(qcv)]
                .map(|e| Detector::new(m, e))
        })
        .collect()
}

pub fn robust_detectors(bmid: BmidConfig, qcv: QcvBounds) -> Vec<Detector> {
    all_detectors(bmid, qcv).into_iter().filter(|d| d.estimator.is_robust()).collect()
}

pub const STABLE_GAMMA2_GRID: [f64; 8] = [0.2, 0.25, 0.33, 0.5, 2.0, 3.0, 4.0, 5.0];
pub const TIMING_LENGTHS: [usize; 25] = [
    40, 50, 60, 70, 100, 200, 250, 300, 350, 400, 450, 500, 550, 600, 650, 700, 750, 800, 850, 900, 950, 1000, 1500,
    2000, 5000,
];

impl BenchConfig {
    pub fn grid(&self) -> Vec<GridPoint> {
        self.scenarios.iter().flat_map(|&s| self.lengths.iter().map(move |&n| GridPoint::new(s, n))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.scenarios.is_empty() || self.lengths.is_empty() || self.detectors.is_empty() {
            return Err(Error::Config("scenarios, lengths and detectors must be nonempty".into()));
        }
        self.grid().iter().try_for_each(GridPoint::validate)
    }

    /// Symmetric stable scale changes `1 -> gamma2` for every `(alpha, gamma2)`.
    pub fn stable_grid(alphas: &[f64], gamma2s: &[f64], len: usize, trials: usize, base_seed: u64) -> Self {
        let scenarios = alphas.iter().flat_map(|&a| gamma2s.iter().map(move |&g| Scenario::stable(a, g))).collect();
        Self {
            scenarios,
            lengths: vec![len],
            detectors: all_detectors(BmidConfig::default(), QcvBounds::default()),
            trials,
            base_seed,
        }
    }

    /// Mixture model with spike bound `nu = ratio * omega2`.
    pub fn mixture_grid(nu_ratios: &[f64], omega2s: &[f64], p: f64, len: usize, trials: usize, base_seed: u64) -> Self {
        let scenarios =
            nu_ratios.iter().flat_map(|&r| omega2s.iter().map(move |&w| Scenario::mixture(w, r * w, p))).collect();
        Self {
            scenarios,
            lengths: vec![len],
            detectors: all_detectors(BmidConfig::default(), QcvBounds::default()),
            trials,
            base_seed,
        }
    }

    /// Named configurations. `*-desk` variants use 50 trials and a reduced
    /// grid.
    pub fn preset(name: &str, base_seed: u64) -> Result<Self> {
        let cfg = match name {
            "paper-table4" => Self::stable_grid(&[1.1, 1.9, 2.0], &STABLE_GAMMA2_GRID, 1000, 100, base_seed),
            "paper-table4-desk" => Self::stable_grid(&[1.1, 1.9, 2.0], &[0.2, 0.5, 3.0, 5.0], 1000, 50, base_seed),
            "paper-table5" => {
                Self::mixture_grid(&[1.5, 5.0], &[0.2, 0.25, 0.33, 0.5, 2.0, 3.0, 4.0, 5.0], 0.05, 1000, 100, base_seed)
            }
            "paper-table5-desk" => Self::mixture_grid(&[1.5, 5.0], &[0.5, 2.0, 5.0], 0.05, 1000, 50, base_seed),
            "timing-mixture" => Self {
                scenarios: vec![Scenario::mixture(5.0, 15.0, 0.05)],
                lengths: TIMING_LENGTHS.to_vec(),
                detectors: robust_detectors(BmidConfig::default(), QcvBounds::default()),
                trials: 100,
                base_seed,
            },
            "timing-mixture-desk" => Self {
                scenarios: vec![Scenario::mixture(5.0, 15.0, 0.05)],
                lengths: vec![100, 200, 500, 1000, 2000, 5000],
                detectors: robust_detectors(BmidConfig::default(), QcvBounds::default()),
                trials: 9,
                base_seed,
            },
            "timing-stable" => Self {
                scenarios: vec![Scenario::stable(1.5, 5.0)],
                lengths: TIMING_LENGTHS.to_vec(),
                detectors: robust_detectors(BmidConfig::default(), QcvBounds::default()),
                trials: 100,
                base_seed,
            },
            other => return Err(Error::Config(format!("unknown preset '{other}'"))),
        };
        Ok(cfg)
    }

    pub const PRESETS: [&'static str; 7] = [
        "paper-table4",
        "paper-table4-desk",
        "paper-table5",
        "paper-table5-desk",
        "timing-mixture",
        "timing-mixture-desk",
        "timing-stable",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Values beyond 1.5 IQR from the quartiles.
    pub outliers: Vec<usize>,
}

/// Linear-interpolation quantile of sorted data (`h = (n - 1) q`).
fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_boxplot(detections: &[usize]) -> Result<BoxplotSummary> {
    if detections.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted: Vec<f64> = detections.iter().map(|&d| d as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let q1 = interpolated_quantile(&sorted, 0.25);
    let q3 = interpolated_quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let outliers =
        detections.iter().copied().filter(|&d| (d as f64) < q1 - 1.5 * iqr || (d as f64) > q3 + 1.5 * iqr).collect();
    Ok(BoxplotSummary {
        min: sorted[0],
        q1,
        median: interpolated_quantile(&sorted, 0.5),
        q3,
        max: sorted[sorted.len() - 1],
        outliers,
    })
}

/// `|truth - detected| / len`, both indices one-based.
pub fn normalized_error(detected: usize, truth: usize, len: usize) -> Result<f64> {
    for index in [detected, truth] {
        if index == 0 || index > len {
            return Err(Error::IndexOutOfRange { index, len });
        }
    }
    Ok(detected.abs_diff(truth) as f64 / len as f64)
}

pub fn mean_absolute_error(detections: &[usize], truth: usize) -> Option<f64> {
    if detections.is_empty() {
        return None;
    }
    Some(detections.iter().map(|&d| d.abs_diff(truth) as f64).sum::<f64>() / detections.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub category: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub label: String,
    pub detector: Detector,
    /// Over successful trials only; `None` when every trial failed.
    pub mae: Option<f64>,
    pub boxplot: Option<BoxplotSummary>,
    /// Per trial, `None` where the detector failed.
    pub detections: Vec<Option<usize>>,
    pub failures: Vec<TrialFailure>,
}

impl MethodSummary {
    fn from_outcomes(detector: Detector, outcomes: Vec<Result<usize>>, truth: usize) -> Self {
        let mut failures = Vec::new();
        let detections: Vec<Option<usize>> = outcomes
            .into_iter()
            .enumerate()
            .map(|(trial, r)| match r {
                Ok(cp) => Some(cp),
                Err(e) => {
                    failures.push(TrialFailure { trial, category: e.category().into(), message: e.to_string() });
                    None
                }
            })
            .collect();
        let ok: Vec<usize> = detections.iter().flatten().copied().collect();
        Self {
            label: detector.label(),
            detector,
            mae: mean_absolute_error(&ok, truth),
            boxplot: summarize_boxplot(&ok).ok(),
            detections,
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub point: GridPoint,
    pub truth: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSummary>,
}

impl PointReport {
    pub fn method(&self, label: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub base_seed: u64,
    pub trials: usize,
    pub points: Vec<PointReport>,
}

impl BenchReport {
    pub fn point(&self, scenario: Scenario) -> Option<&PointReport> {
        self.points.iter().find(|p| p.point.scenario == scenario)
    }
}

/// Runs every detector on every trial series of every grid point. Trials run
/// in parallel; the report is assembled in grid and trial order.
pub fn run_mae_study(cfg: &BenchConfig) -> Result<BenchReport> {
    run_mae_study_with(cfg, |det, values| det.detect(values).map(|r| r.change_point))
}

/// As [`run_mae_study`] with a caller-supplied detection routine.
pub fn run_mae_study_with<F>(cfg: &BenchConfig, detect: F) -> Result<BenchReport>
where
    F: Fn(&Detector, &[f64]) -> Result<usize> + Sync,
{
    cfg.validate()?;
    let grid = cfg.grid();
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..cfg.trials).map(move |t| (g, t))).collect();
    let outcomes: Vec<Vec<Result<usize>>> = jobs
        .par_iter()
        .map(|&(g, t)| {
            let point = &grid[g];
            match point.generate(point.trial_seed(cfg.base_seed, t)) {
                Ok(series) => cfg.detectors.iter().map(|d| detect(d, &series.values)).collect(),
                Err(e) => vec![Err(e); cfg.detectors.len()],
            }
        })
        .collect();
    let mut outcomes = outcomes.into_iter();
    let points = grid
        .iter()
        .map(|point| {
            let mut per_method: Vec<Vec<Result<usize>>> = vec![Vec::with_capacity(cfg.trials); cfg.detectors.len()];
            for trial in outcomes.by_ref().take(cfg.trials) {
                for (m, r) in trial.into_iter().enumerate() {
                    per_method[m].push(r);
                }
            }
            PointReport {
                point: *point,
                truth: point.truth(),
                seeds: (0..cfg.trials).map(|t| point.trial_seed(cfg.base_seed, t)).collect(),
                methods: cfg
                    .detectors
                    .iter()
                    .zip(per_method)
                    .map(|(d, o)| MethodSummary::from_outcomes(*d, o, point.truth()))
                    .collect(),
            }
        })
        .collect();
    Ok(BenchReport { base_seed: cfg.base_seed, trials: cfg.trials, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingPoint {
    pub scenario: Scenario,
    pub len: usize,
    pub label: String,
    pub median_secs: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub scenario: Scenario,
    pub label: String,
    /// Fitted `beta` in `time ~ c * N^beta`.
    pub exponent: f64,
    pub log_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub base_seed: u64,
    pub trials: usize,
    pub points: Vec<TimingPoint>,
    pub fits: Vec<ScalingFit>,
}

impl TimingReport {
    pub fn fit(&self, label: &str) -> Option<&ScalingFit> {
        self.fits.iter().find(|f| f.label == label)
    }

    pub fn median(&self, label: &str, len: usize) -> Option<f64> {
        self.points.iter().find(|p| p.label == label && p.len == len).map(|p| p.median_secs)
    }
}

fn binomial_half_cdf(n: usize, k: usize) -> f64 {
    // P(Bin(n, 1/2) <= k), accumulated in log space.
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut ln_choose = 0.0f64;
    let mut total = 0.0;
    for i in 0..=k.min(n) {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        total += (ln_choose + ln_half_n).exp();
    }
    total.min(1.0)
}

/// Distribution-free confidence interval for the median from order
/// statistics, at coverage at least `level`. Falls back to the sample range
/// when too few samples exist.
pub fn median_confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let tail = (1.0 - level) / 2.0;
    // Largest j (1-based) with P(B <= j - 1) <= tail; interval [s_(j), s_(n+1-j)].
    let mut j = 0;
    while j < n / 2 && binomial_half_cdf(n, j) <= tail {
        j += 1;
    }
    if j == 0 {
        return Ok((s[0], s[n - 1]));
    }
    Ok((s[j - 1], s[n - j]))
}

/// Least-squares fit of `ln t = ln c + beta ln N`.
pub fn fit_power_law(lengths: &[usize], times: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> =
        lengths.iter().zip(times).filter(|(_, &t)| t > 0.0).map(|(&n, &t)| ((n as f64).ln(), t.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if pts.len() < 2 || sxx == 0.0 {
        return Err(Error::Config("power-law fit needs at least two distinct lengths".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let beta = sxy / sxx;
    Ok((beta, my - beta * mx))
}

impl BenchConfig {
    fn validate_timing(&self) -> Result<()> {
        self.validate()?;
        let mut distinct = self.lengths.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 5 {
            return Err(Error::Config(format!(
                "timing study needs at least 5 distinct lengths, got {}",
                distinct.len()
            )));
        }
        if distinct[distinct.len() - 1] < 10 * distinct[0] {
            return Err(Error::Config("timing lengths must span at least one decade".into()));
        }
        Ok(())
    }
}

/// Wall time of detection only (generation excluded), sequentially, with one
/// discarded warm-up run per `(length, detector)`.
pub fn run_timing_study(cfg: &BenchConfig) -> Result<TimingReport> {
    cfg.validate_timing()?;
    let mut points = Vec::new();
    for &scenario in &cfg.scenarios {
        for &len in &cfg.lengths {
            let point = GridPoint::new(scenario, len);
            let series: Vec<SyntheticSeries> =
                (0..cfg.trials).map(|t| point.generate(point.trial_seed(cfg.base_seed, t))).collect::<Result<_>>()?;
            for det in &cfg.detectors {
                // Failures still cost time; the timing is what is measured.
                let _ = det.detect(&series[0].values);
                let samples: Vec<f64> = series
                    .iter()
                    .map(|s| {
                        let start = Instant::now();
                        let _ = std::hint::black_box(det.detect(std::hint::black_box(&s.values)));
                        start.elapsed().as_secs_f64()
                    })
                    .collect();
                let mut sorted = samples.clone();
                sorted.sort_by(f64::total_cmp);
                let n = sorted.len();
                let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
                let (ci_low, ci_high) = median_confidence_interval(&samples, 0.95)?;
                points.push(TimingPoint {
                    scenario,
                    len,
                    label: det.label(),
                    median_secs: median,
                    ci_low,
                    ci_high,
                    samples,
                });
            }
        }
    }
    let mut fits = Vec::new();
    for &scenario in &cfg.scenarios {
        for det in &cfg.detectors {
            let label = det.label();
            let (lens, times): (Vec<usize>, Vec<f64>) = points
                .iter()
                .filter(|p| p.scenario == scenario && p.label == label)
                .map(|p| (p.len, p.median_secs))
                .unzip();
            let (exponent, log_c) = fit_power_law(&lens, &times)?;
            fits.push(ScalingFit { scenario, label, exponent, log_c });
        }
    }
    Ok(TimingReport { base_seed: cfg.base_seed, trials: cfg.trials, points, fits })
}

const GRID_HEADER: [&str; 9] = ["model", "alpha", "gamma1", "gamma2", "omega2", "nu", "p", "len", "cp"];

fn grid_fields(point: &GridPoint) -> Vec<String> {
    let blank = String::new;
    let mut f = match point.scenario {
        Scenario::Stable { alpha, gamma1, gamma2 } => {
            vec!["stable".into(), fmt_f64(alpha), fmt_f64(gamma1), fmt_f64(gamma2), blank(), blank(), blank()]
        }
        Scenario::Mixture { omega2, nu, p } => {
            vec!["mixture".into(), blank(), blank(), blank(), fmt_f64(omega2), fmt_f64(nu), fmt_f64(p)]
        }
    };
    f.extend([point.len.to_string(), point.cp.to_string()]);
    f
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (grid point, method): MAE, detection quartiles and failures.
pub fn write_mae_csv<W: Write>(report: &BenchReport, out: W) -> Result<()> {
    let mut header = GRID_HEADER.to_vec();
    header.extend(["method", "mae", "q1", "median", "q3", "failures"]);
    let rows = report.points.iter().flat_map(|p| {
        p.methods.iter().map(move |m| {
            let mut row = grid_fields(&p.point);
            let b = m.boxplot.as_ref();
            row.extend([
                m.label.clone(),
                opt(m.mae),
                opt(b.map(|b| b.q1)),
                opt(b.map(|b| b.median)),
                opt(b.map(|b| b.q3)),
                m.failures.len().to_string(),
            ]);
            row
        })
    });
    write_rows(out, &header, rows)
}

/// One row per grid point, one MAE column per method in report order.
pub fn write_mae_table_csv<W: Write>(report: &BenchReport, out: W) -> Result<()> {
    let labels: Vec<String> =
        report.points.first().map(|p| p.methods.iter().map(|m| m.label.clone()).collect()).unwrap_or_default();
    let mut header = GRID_HEADER.to_vec();
    header.extend(labels.iter().map(String::as_str));
    let rows = report.points.iter().map(|p| {
        let mut row = grid_fields(&p.point);
        row.extend(p.methods.iter().map(|m| opt(m.mae)));
        row
    });
    write_rows(out, &header, rows)
}

/// Tidy per-trial detections; failed trials have an empty detection.
pub fn write_boxplot_csv<W: Write>(report: &BenchReport, out: W) -> Result<()> {
    let mut header = GRID_HEADER.to_vec();
    header.extend(["method", "trial", "seed", "detection"]);
    let rows = report.points.iter().flat_map(|p| {
        p.methods.iter().flat_map(move |m| {
            m.detections.iter().enumerate().map(move |(t, d)| {
                let mut row = grid_fields(&p.point);
                row.extend([
                    m.label.clone(),
                    t.to_string(),
                    p.seeds[t].to_string(),
                    d.map(|d| d.to_string()).unwrap_or_default(),
                ]);
                row
            })
        })
    });
    write_rows(out, &header, rows)
}

pub fn write_timing_csv<W: Write>(report: &TimingReport, out: W) -> Result<()> {
    let mut header = GRID_HEADER.to_vec();
    header.extend(["method", "median_secs", "ci_low", "ci_high", "trials"]);
    let rows = report.points.iter().map(|p| {
        let mut row = grid_fields(&GridPoint::new(p.scenario, p.len));
        row.extend([
            p.label.clone(),
            fmt_f64(p.median_secs),
            fmt_f64(p.ci_low),
            fmt_f64(p.ci_high),
            p.samples.len().to_string(),
        ]);
        row
    });
    write_rows(out, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxplot_examples() {
        let b = summarize_boxplot(&[500; 100]).unwrap();
        assert_eq!((b.min, b.q1, b.median, b.q3, b.max), (500.0, 500.0, 500.0, 500.0, 500.0));
        assert!(b.outliers.is_empty());
        let seq: Vec<usize> = (1..=100).collect();
        let b = summarize_boxplot(&seq).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (25.75, 50.5, 75.25));
        let mut with_far = vec![10; 20];
        with_far.extend([11, 12, 9, 1000]);
        // Quartiles collapse to 10, so every value other than 10 lies outside.
        let b = summarize_boxplot(&with_far).unwrap();
        assert_eq!((b.q1, b.q3), (10.0, 10.0));
        assert_eq!(b.outliers, vec![11, 12, 9, 1000]);
        assert_eq!(summarize_boxplot(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn normalized_error_examples() {
        assert_eq!(normalized_error(500, 500, 1000).unwrap(), 0.0);
        let e = normalized_error(380, 384, 760).unwrap();
        assert!((e - 0.00526).abs() < 5e-6, "{e}");
        assert_eq!(normalized_error(1, 1000, 1000).unwrap(), 999.0 / 1000.0);
        assert!(matches!(normalized_error(0, 5, 10), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(normalized_error(3, 11, 10), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn seeds_depend_on_parameters_not_position() {
        let a = GridPoint::new(Scenario::stable(1.1, 3.0), 1000);
        let b = GridPoint::new(Scenario::stable(1.1, 0.2), 1000);
        assert_ne!(a.trial_seed(1, 0), b.trial_seed(1, 0));
        assert_ne!(a.trial_seed(1, 0), a.trial_seed(1, 1));
        assert_eq!(a.trial_seed(1, 4), GridPoint::new(Scenario::stable(1.1, 3.0), 1000).trial_seed(1, 4));
        assert_eq!(a.truth(), 499);
    }

    #[test]
    fn oracle_detector_has_zero_mae() {
        let mut cfg = BenchConfig::stable_grid(&[1.5], &[0.5, 3.0], 200, 5, 3);
        cfg.lengths = vec![200, 300];
        let r = run_mae_study_with(&cfg, |_, values| Ok(values.len() / 2 - 1)).unwrap();
        for p in &r.points {
            for m in &p.methods {
                assert_eq!(m.mae, Some(0.0));
                assert!(m.failures.is_empty());
            }
        }
    }

    #[test]
    fn failures_are_recorded_not_dropped() {
        let cfg = BenchConfig::stable_grid(&[1.5], &[3.0], 100, 4, 3);
        let r = run_mae_study_with(&cfg, |d, values| {
            if d.method == Method::Ols {
                Err(Error::InsufficientLength { required: 1_000, actual: values.len() })
            } else {
                Ok(49)
            }
        })
        .unwrap();
        let p = &r.points[0];
        let ols = p.method("OLS").unwrap();
        assert_eq!(ols.failures.len(), 4);
        assert_eq!(ols.mae, None);
        assert_eq!(ols.detections, vec![None; 4]);
        assert_eq!(p.method("ICSS").unwrap().mae, Some(0.0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = BenchConfig::stable_grid(&[1.5], &[3.0], 100, 0, 3);
        assert!(cfg.validate().is_err());
        cfg.trials = 2;
        cfg.scenarios.push(Scenario::stable(2.5, 1.0));
        assert!(cfg.validate().is_err());
        assert!(BenchConfig::preset("nope", 0).is_err());
        for name in BenchConfig::PRESETS {
            BenchConfig::preset(name, 0).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn timing_rejects_degenerate_length_grids() {
        let mut cfg = BenchConfig::preset("timing-mixture-desk", 0).unwrap();
        cfg.lengths = vec![500; 6];
        assert!(matches!(run_timing_study(&cfg), Err(Error::Config(_))));
        cfg.lengths = vec![100, 120, 140, 160, 180];
        assert!(matches!(run_timing_study(&cfg), Err(Error::Config(_))));
        assert!(fit_power_law(&[10, 10, 10], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let lens = [10, 100, 1000, 10_000];
        let times: Vec<f64> = lens.iter().map(|&n| 3e-7 * (n as f64).powf(1.37)).collect();
        let (beta, log_c) = fit_power_law(&lens, &times).unwrap();
        assert!((beta - 1.37).abs() < 1e-12);
        assert!((log_c - 3e-7f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn median_interval_uses_order_statistics() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        let (lo, hi) = median_confidence_interval(&s, 0.95).unwrap();
        // Bin(100, 1/2): P(B <= 39) = 0.0176, P(B <= 40) = 0.0284.
        assert_eq!((lo, hi), (40.0, 61.0));
        assert_eq!(median_confidence_interval(&[3.0, 1.0, 2.0], 0.95).unwrap(), (1.0, 3.0));
    }

    #[test]
    fn report_csvs_have_expected_shape() {
        let cfg = BenchConfig::stable_grid(&[1.5], &[0.5, 3.0], 100, 3, 11);
        let r = run_mae_study(&cfg).unwrap();
        let mut table = Vec::new();
        write_mae_table_csv(&r, &mut table).unwrap();
        let table = String::from_utf8(table).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].ends_with("ICSS,ICSS[BMID],ICSS[QCV],OLS,OLS[BMID],OLS[QCV]"), "{}", lines[0]);
        let mut long = Vec::new();
        write_mae_csv(&r, &mut long).unwrap();
        assert_eq!(String::from_utf8(long).unwrap().lines().count(), 1 + 2 * 6);
        let mut tidy = Vec::new();
        write_boxplot_csv(&r, &mut tidy).unwrap();
        assert_eq!(String::from_utf8(tidy).unwrap().lines().count(), 1 + 2 * 6 * 3);
    }
}
