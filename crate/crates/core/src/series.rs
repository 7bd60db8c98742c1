// SPDX-License-Identifier: MIT OR Apache-2.0

//! Real-valued series I/O and preprocessing.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::css::CssTrace;
use crate::detect::DetectionResult;
use crate::error::{Error, Result};
use crate::estimators::sorted_median;
use crate::simulate::SyntheticSeries;

/// Shortest series any detector accepts after orientation handling.
pub const MIN_DETECT_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub source: Option<PathBuf>,
    pub column: Option<String>,
    pub preprocessing: Vec<PreprocessStep>,
}

impl TimeSeries {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values, source: None, column: None, preprocessing: Vec::new() }
    }
}

/// Which CSV column to read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    /// One-based position.
    Index(usize),
    Name(String),
}

impl Default for ColumnSelector {
    fn default() -> Self {
        ColumnSelector::Index(1)
    }
}

impl FromStr for ColumnSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<usize>() {
            Ok(0) => Err(Error::Config("column index is one-based".into())),
            Ok(i) => Ok(ColumnSelector::Index(i)),
            Err(_) if s.trim().is_empty() => Err(Error::Config("empty column name".into())),
            Err(_) => Ok(ColumnSelector::Name(s.trim().to_string())),
        }
    }
}

impl fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnSelector::Index(i) => write!(f, "{i}"),
            ColumnSelector::Name(n) => f.write_str(n),
        }
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

/// Reads one numeric column. The first row is treated as a header when any
/// of its cells is not a number. Every remaining cell of the column must be a
/// finite number.
pub fn ingest_csv(path: &Path, column: &ColumnSelector) -> Result<TimeSeries> {
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    let mut records = reader.records().peekable();
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        Error::Parse { line, message: e.to_string() }
    };

    let header = match records.peek() {
        Some(Ok(first)) if first.iter().any(|c| parse_cell(c).is_none()) => {
            Some(records.next().unwrap().map_err(csv_err)?)
        }
        _ => None,
    };
    let col = match column {
        ColumnSelector::Index(i) => {
            i.checked_sub(1).ok_or_else(|| Error::Config("column index is one-based".into()))?
        }
        ColumnSelector::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::Config(format!("no column named '{name}'")))?,
    };

    let mut values = Vec::new();
    for record in records {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let cell =
            record.get(col).ok_or_else(|| Error::Parse { line, message: format!("row has no column {}", col + 1) })?;
        match parse_cell(cell) {
            Some(v) if v.is_finite() => values.push(v),
            _ => return Err(Error::Parse { line, message: format!("'{cell}' is not a finite number") }),
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyColumn(column.to_string()));
    }
    Ok(TimeSeries {
        values,
        source: Some(path.to_path_buf()),
        column: Some(match (&header, column) {
            (Some(h), ColumnSelector::Index(_)) => h.get(col).unwrap_or_default().to_string(),
            _ => column.to_string(),
        }),
        preprocessing: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reducer {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum PreprocessStep {
    LogReturns,
    Difference { order: usize },
    Aggregate { block: usize, reducer: Reducer },
}

impl fmt::Display for PreprocessStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreprocessStep::LogReturns => f.write_str("log-returns"),
            PreprocessStep::Difference { order } => write!(f, "diff:{order}"),
            PreprocessStep::Aggregate { block, reducer: Reducer::Mean } => write!(f, "agg:{block}"),
            PreprocessStep::Aggregate { block, reducer: Reducer::Median } => write!(f, "agg:{block}:median"),
        }
    }
}

impl FromStr for PreprocessStep {
    type Err = Error;

    /// `log-returns`, `diff[:k]`, `agg:b[:mean|median]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid preprocessing step '{s}'"));
        let positive = |t: &str| t.parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(bad);
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["log-returns"] => Ok(PreprocessStep::LogReturns),
            ["diff"] => Ok(PreprocessStep::Difference { order: 1 }),
            ["diff", k] => Ok(PreprocessStep::Difference { order: positive(k)? }),
            ["agg", b] => Ok(PreprocessStep::Aggregate { block: positive(b)?, reducer: Reducer::Mean }),
            ["agg", b, r] => {
                let reducer = match *r {
                    "mean" => Reducer::Mean,
                    "median" => Reducer::Median,
                    _ => return Err(bad()),
                };
                Ok(PreprocessStep::Aggregate { block: positive(b)?, reducer })
            }
            _ => Err(bad()),
        }
    }
}

/// Ordered preprocessing pipeline, written as comma-separated steps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub steps: Vec<PreprocessStep>,
}

impl FromStr for PreprocessSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(Self::default());
        }
        Ok(Self { steps: s.split(',').map(str::parse).collect::<Result<_>>()? })
    }
}

fn apply_step(values: &[f64], step: PreprocessStep) -> Result<Vec<f64>> {
    Ok(match step {
        PreprocessStep::LogReturns => {
            if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| v <= 0.0) {
                return Err(Error::NonPositiveForLog { index, value });
            }
            values.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
        }
        PreprocessStep::Difference { order } => {
            let mut out = values.to_vec();
            for _ in 0..order {
                out = out.windows(2).map(|w| w[1] - w[0]).collect();
            }
            out
        }
        PreprocessStep::Aggregate { block, reducer } => values
            .chunks_exact(block)
            .map(|c| match reducer {
                Reducer::Mean => c.iter().sum::<f64>() / block as f64,
                Reducer::Median => {
                    let mut s = c.to_vec();
                    s.sort_by(f64::total_cmp);
                    sorted_median(&s)
                }
            })
            .collect(),
    })
}

/// Applies the steps in order. The result must still be long enough to run
/// a detector.
pub fn preprocess(ts: &TimeSeries, spec: &PreprocessSpec) -> Result<TimeSeries> {
    let mut values = ts.values.clone();
    for &step in &spec.steps {
        values = apply_step(&values, step)?;
    }
    if values.len() < MIN_DETECT_LEN {
        return Err(Error::TooShortAfterPreprocess { required: MIN_DETECT_LEN, actual: values.len() });
    }
    let mut preprocessing = ts.preprocessing.clone();
    preprocessing.extend(&spec.steps);
    Ok(TimeSeries { values, source: ts.source.clone(), column: ts.column.clone(), preprocessing })
}

/// Round-trip float formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `index,value,regime`, index one-based.
pub fn write_fixture_csv<W: Write>(out: W, series: &SyntheticSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "value", "regime"]).map_err(io)?;
    for (i, v) in series.values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*v), series.regime(i + 1).to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a fixture back, recovering the change point from the regime column.
pub fn read_fixture_csv(path: &Path) -> Result<SyntheticSeries> {
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let mut values = Vec::new();
    let mut cp = None;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(io)?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<&str> {
            rec.get(k).ok_or_else(|| Error::Parse { line, message: "fixture rows need 3 fields".into() })
        };
        let value = parse_cell(field(1)?)
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse { line, message: "bad value".into() })?;
        if field(2)? == "2" && cp.is_none() {
            cp = Some(i + 1);
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::EmptyColumn("value".into()));
    }
    let cp = cp.unwrap_or(values.len() + 1);
    Ok(SyntheticSeries { values, cp })
}

/// `n,C_n,S_n` for n = 1..N. `S_n` is blank where the detector defines no
/// statistic.
pub fn write_trace_csv<W: Write>(out: W, trace: &CssTrace, result: &DetectionResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "C_n", "S_n"]).map_err(io)?;
    for (i, c) in trace.values.iter().enumerate() {
        let s = result.statistic_trace.get(i).map(|&s| fmt_f64(s)).unwrap_or_default();
        w.write_record([(i + 1).to_string(), fmt_f64(*c), s]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(f)?;
    Ok(())
}
