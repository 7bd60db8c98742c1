// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,
    #[error("need at least {required} observations, got {actual}")]
    InsufficientLength { required: usize, actual: usize },
    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("median absolute deviation is zero; scale is undefined")]
    DegenerateScale,
    #[error("quantile window [{lo}, {hi}) holds fewer than 2 order statistics")]
    WindowTooSmall { lo: usize, hi: usize },
    #[error("invalid quantile bounds a={a}, b={b}; need 0 < a < b < 1")]
    InvalidBounds { a: f64, b: f64 },
    #[error("invalid biweight constant c={0}; need c > 0")]
    InvalidTuning(f64),
    #[error("stability index alpha={0} outside (0, 2]")]
    InvalidAlpha(f64),
    #[error("scale gamma={0} must be positive and finite")]
    InvalidGamma(f64),
    #[error("total sum of squares is zero")]
    ZeroTotalSumOfSquares,
    #[error("index {index} outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("column {0} is empty")]
    EmptyColumn(String),
    #[error("log-returns need strictly positive values; got {value} at position {index}")]
    NonPositiveForLog { index: usize, value: f64 },
    #[error("series has {actual} values after preprocessing; need at least {required}")]
    TooShortAfterPreprocess { required: usize, actual: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::EmptySample => "EmptySample",
            Error::InsufficientLength { .. } => "InsufficientLength",
            Error::NonFinite { .. } => "NonFinite",
            Error::DegenerateScale => "DegenerateScale",
            Error::WindowTooSmall { .. } => "WindowTooSmall",
            Error::InvalidBounds { .. } => "InvalidBounds",
            Error::InvalidTuning(_) => "InvalidTuning",
            Error::InvalidAlpha(_) => "InvalidAlpha",
            Error::InvalidGamma(_) => "InvalidGamma",
            Error::ZeroTotalSumOfSquares => "ZeroTotalSumOfSquares",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::Config(_) => "ConfigError",
            Error::FileNotFound(_) => "FileNotFound",
            Error::Parse { .. } => "ParseError",
            Error::EmptyColumn(_) => "EmptyColumn",
            Error::NonPositiveForLog { .. } => "NonPositiveForLog",
            Error::TooShortAfterPreprocess { .. } => "TooShortAfterPreprocess",
            Error::EmptyInput => "EmptyInput",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
