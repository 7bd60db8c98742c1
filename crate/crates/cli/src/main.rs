// SPDX-License-Identifier: MIT OR Apache-2.0

//! `scalecp`: detect, simulate and benchmark single scale changes.

mod config;

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use scalecp_core::bench::{self, BenchConfig};
use scalecp_core::series::{self, ColumnSelector, PreprocessSpec, PreprocessStep};
use scalecp_core::simulate::{gen_mixture_series, gen_stable_series, MixtureSpec, StableSpec};
use scalecp_core::{
    BmidConfig, DetectionResult, Detector, Error, Method, PrefixMode, QcvBounds, Result, ScaleEstimator,
};

#[derive(Parser)]
#[command(name = "scalecp", version, about = "Robust detection of a single scale change")]
struct Cli {
    /// Flat key = value file of default flags (see README).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect the change point of a series read from CSV.
    Detect(DetectArgs),
    /// Write a synthetic series with known change point.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Run Monte Carlo studies.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Icss,
    Ols,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Classical,
    Bmid,
    Qcv,
}

#[derive(Args)]
struct EstimatorOpts {
    /// BMID tuning constant.
    #[arg(long, default_value_t = BmidConfig::DEFAULT_C)]
    bmid_c: f64,
    /// Lower QCV quantile.
    #[arg(long, default_value_t = 0.1)]
    qcv_a: f64,
    /// Upper QCV quantile.
    #[arg(long, default_value_t = 0.9)]
    qcv_b: f64,
}

impl EstimatorOpts {
    fn bmid(&self) -> Result<BmidConfig> {
        BmidConfig::new(self.bmid_c)
    }

    fn qcv(&self) -> Result<QcvBounds> {
        QcvBounds::new(self.qcv_a, self.qcv_b)
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Input CSV.
    #[arg(long)]
    input: PathBuf,
    /// One-based column index or header name.
    #[arg(long, default_value = "1")]
    column: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Icss)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Bmid)]
    estimator: EstimatorArg,
    #[command(flatten)]
    est: EstimatorOpts,
    /// Comma-separated steps: log-returns, diff[:k], agg:b[:mean|median].
    #[arg(long, default_value = "")]
    preprocess: String,
    /// Recompute every prefix from scratch instead of incrementally.
    #[arg(long)]
    exact_naive: bool,
    /// Result JSON path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// CSV of n, C_n, S_n.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Args)]
struct LayoutArgs {
    /// Series length.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// First index of the second regime; defaults to n/2.
    #[arg(long)]
    cp: Option<usize>,
    #[arg(long, env = "SCALECP_SEED", default_value_t = 0)]
    seed: u64,
    /// Fixture CSV path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Symmetric alpha-stable noise with a scale change.
    Stable {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma1: f64,
        #[arg(long)]
        gamma2: f64,
        #[command(flatten)]
        layout: LayoutArgs,
    },
    /// Gaussian noise with random-sign uniform spikes.
    Mixture {
        #[arg(long)]
        omega2: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        layout: LayoutArgs,
    },
}

#[derive(Args)]
struct BenchOpts {
    /// Named configuration.
    #[arg(long)]
    preset: String,
    /// Override the preset's trial count.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "SCALECP_SEED", default_value_t = 0)]
    seed: u64,
    /// Directory for reports; created if missing. Tables go to stdout when absent.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Mean absolute detection error per grid point and method.
    Mae(BenchOpts),
    /// Median wall time against series length.
    Timing(BenchOpts),
}

impl MethodArg {
    fn method(self) -> Method {
        match self {
            MethodArg::Icss => Method::Icss,
            MethodArg::Ols => Method::Ols,
        }
    }
}

impl DetectArgs {
    fn estimator(&self) -> Result<ScaleEstimator> {
        Ok(match self.estimator {
            EstimatorArg::Classical => ScaleEstimator::Classical,
            EstimatorArg::Bmid => ScaleEstimator::Bmid(self.est.bmid()?),
            EstimatorArg::Qcv => ScaleEstimator::Qcv(self.est.qcv()?),
        })
    }
}

#[derive(Serialize)]
struct DetectReport<'a> {
    label: String,
    input: &'a Path,
    column: Option<String>,
    preprocessing: Vec<PreprocessStep>,
    len: usize,
    #[serde(flatten)]
    result: DetectionResult,
}

fn output_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let detector = Detector::new(args.method.method(), args.estimator()?);
    let column: ColumnSelector = args.column.parse()?;
    let spec: PreprocessSpec = args.preprocess.parse()?;
    let raw = series::ingest_csv(&args.input, &column)?;
    let ts = series::preprocess(&raw, &spec)?;
    let mode = if args.exact_naive { PrefixMode::ExactNaive } else { PrefixMode::Incremental };
    let (trace, result) = detector.detect_traced(&ts.values, mode)?;
    if let Some(path) = &args.trace_csv {
        series::write_trace_csv(File::create(path)?, &trace, &result)?;
    }
    let report = DetectReport {
        label: detector.label(),
        input: &args.input,
        column: ts.column.clone(),
        preprocessing: ts.preprocessing.clone(),
        len: ts.values.len(),
        result,
    };
    let mut out = output_writer(args.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_simulate(cmd: SimulateCmd) -> Result<()> {
    let (series, layout) = match cmd {
        SimulateCmd::Stable { alpha, gamma1, gamma2, layout } => {
            let cp = layout.cp.unwrap_or(layout.n / 2);
            let spec = StableSpec { alpha, gamma1, gamma2, len: layout.n, cp, seed: layout.seed };
            (gen_stable_series(&spec)?, layout)
        }
        SimulateCmd::Mixture { omega2, nu, p, layout } => {
            let cp = layout.cp.unwrap_or(layout.n / 2);
            let spec = MixtureSpec { omega2, nu, p, len: layout.n, cp, seed: layout.seed };
            (gen_mixture_series(&spec)?, layout)
        }
    };
    series::write_fixture_csv(output_writer(layout.output.as_deref())?, &series)
}

fn bench_config(opts: &BenchOpts) -> Result<BenchConfig> {
    let mut cfg = BenchConfig::preset(&opts.preset, opts.seed)?;
    if let Some(t) = opts.trials {
        cfg.trials = t;
    }
    Ok(cfg)
}

fn write_to(dir: &Path, name: &str, f: impl FnOnce(File) -> Result<()>) -> Result<()> {
    f(File::create(dir.join(name))?)
}

fn cmd_bench(cmd: BenchCmd) -> Result<()> {
    match cmd {
        BenchCmd::Mae(opts) => {
            let report = bench::run_mae_study(&bench_config(&opts)?)?;
            match &opts.out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    write_to(dir, "mae_table.csv", |f| bench::write_mae_table_csv(&report, f))?;
                    write_to(dir, "mae.csv", |f| bench::write_mae_csv(&report, f))?;
                    write_to(dir, "detections.csv", |f| bench::write_boxplot_csv(&report, f))?;
                    series::write_json(&dir.join("report.json"), &report)
                }
                None => bench::write_mae_table_csv(&report, io::stdout().lock()),
            }
        }
        BenchCmd::Timing(opts) => {
            let report = bench::run_timing_study(&bench_config(&opts)?)?;
            match &opts.out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    write_to(dir, "timing.csv", |f| bench::write_timing_csv(&report, f))?;
                    series::write_json(&dir.join("timing.json"), &report)
                }
                None => bench::write_timing_csv(&report, io::stdout().lock()),
            }
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    category: &'a str,
    message: String,
}

fn report_error(category: &str, message: String) {
    let body = serde_json::json!({ "error": ErrorBody { category, message } });
    eprintln!("{body}");
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect(args) => cmd_detect(args),
        Command::Simulate(cmd) => cmd_simulate(cmd),
        Command::Bench(cmd) => cmd_bench(cmd),
    }
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            report_error(e.category(), e.to_string());
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("UsageError", e.render().to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.category(), e.to_string());
            ExitCode::from(1)
        }
    }
}
