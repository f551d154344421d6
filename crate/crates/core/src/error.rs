//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the regression fitters.
///
/// These are deliberately free of model names; callers that fit a named
/// model wrap them in [`Error::Fit`] so messages read like
/// `MID: need at least 3 points, got 2`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("design matrix is singular (regressor values carry no information)")]
    DegenerateDesign,
    #[error("input length mismatch: {xs} x values vs {ys} y values")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("all regressor values are zero")]
    AllZeroRegressor,
    #[error("fitted share {d} lies outside [0, 1]")]
    ShareOutOfRange { d: f64 },
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    // --- data ingestion ---
    #[error("row {row}: malformed value {value:?} in column '{column}'")]
    MalformedRow {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("header mismatch: expected '{expected}', got '{got}'")]
    BadHeader { expected: String, got: String },
    #[error("duplicate year {year}")]
    DuplicateYear { year: i32 },
    #[error("row {row}: inflation must be > 0, got {value}")]
    NonPositiveInflation { row: usize, value: f64 },
    #[error("row {row}: category turnovers sum to {sum}, exceeding total turnover {total}")]
    CategoryExceedsTotal { row: usize, sum: f64, total: f64 },

    // --- deflation ---
    #[error("base year {base_year} not present in series")]
    MissingBaseYear { base_year: i32 },
    #[error("gap in years: {prev} is followed by {next}; the deflation recurrence needs consecutive years")]
    GapInYears { prev: i32, next: i32 },
    #[error("year {year} lies after base year {base_year}; only backward deflation is supported")]
    YearBeyondBase { year: i32, base_year: i32 },
    #[error("missing nominal value for year {year}")]
    MissingNominal { year: i32 },
    #[error("year {year} has no deflator (outside the deflated range)")]
    UncoveredYear { year: i32 },

    // --- model fitting ---
    #[error("{model}: {source}")]
    Fit {
        model: &'static str,
        source: FitError,
    },
    #[error("no overlapping years between the two series")]
    NoYearOverlap,
    #[error("no included category has a nonzero count")]
    ZeroIncludedCount,

    // --- scenario parameters ---
    #[error("k must lie in (0, 1], got {k}")]
    KOutOfRange { k: f64 },
    #[error("beta must lie in [0, 1 - k] = [0, {max}], got {beta}")]
    BetaOutOfRange { beta: f64, max: f64 },
    #[error("share d must lie in [0, 1], got {d}")]
    DOutOfRange { d: f64 },
    #[error("surviving count n0 must be positive")]
    NonPositiveN0,
    #[error("average revenue s1sse must be positive, got {s1sse}")]
    NonPositiveAar { s1sse: f64 },
    #[error("alpha must be >= 1, got {alpha}")]
    AlphaOutOfRange { alpha: f64 },
    #[error("the indicator model must be degree 1, got degree {got}")]
    NotDegreeOne { got: usize },

    // --- synthetic economy specs ---
    #[error("synthetic spec invalid: {reason}")]
    InvalidSyntheticSpec { reason: String },

    // --- plumbing ---
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a model name to a bare fit error.
    pub fn fit(model: &'static str, source: FitError) -> Self {
        Error::Fit { model, source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
