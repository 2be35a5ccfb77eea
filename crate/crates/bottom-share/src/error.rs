use core::fmt;

use crate::types::VarianceMethod;

/// Errors produced by estimation, streaming, and model construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An observation was zero, negative, NaN, or infinite.
    NonPositiveObservation { value: f64 },
    /// Fewer than two observations; variances are undefined.
    TooFewObservations { n: usize },
    /// A probability argument fell outside the open interval (0, 1).
    InvalidProbability { p: f64 },
    /// `floor(n·p) = 0`: the sample is too small for the requested quantile.
    QuantileIndexZero { n: usize, p: f64 },
    /// A fixed quantile threshold must be strictly positive.
    NonPositiveQuantile { q: f64 },
    /// A confidence level must lie in (0, 1).
    InvalidLevel { level: f64 },
    /// No observations at or below the threshold; conditional moments are
    /// undefined.
    DegenerateConditional,
    /// The requested variance method has not been computed on this estimate.
    MethodMissing(VarianceMethod),
    /// Two-sample comparison requires both estimates to target the same `p`.
    PMismatch { left: f64, right: f64 },
    /// A density value must be strictly positive and finite.
    NonPositiveDensity { value: f64 },
    /// Sufficient statistics taken against different thresholds cannot merge.
    ThresholdMismatch,
    /// Not enough accumulated data to finalize an estimate.
    InsufficientData,
    /// Bootstrap needs at least two resamples.
    InvalidResampleCount { b: usize },
    /// A distribution parameter was out of range.
    InvalidParameter { name: &'static str, value: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositiveObservation { value } => {
                write!(f, "observation {value} is not strictly positive and finite")
            }
            Error::TooFewObservations { n } => {
                write!(f, "need at least 2 observations, got {n}")
            }
            Error::InvalidProbability { p } => {
                write!(f, "probability {p} must lie strictly between 0 and 1")
            }
            Error::QuantileIndexZero { n, p } => {
                write!(f, "floor(n*p) = 0 for n = {n}, p = {p}; sample too small for this p")
            }
            Error::NonPositiveQuantile { q } => {
                write!(f, "fixed quantile {q} must be strictly positive")
            }
            Error::InvalidLevel { level } => {
                write!(f, "confidence level {level} must lie strictly between 0 and 1")
            }
            Error::DegenerateConditional => {
                write!(f, "no observations at or below the threshold")
            }
            Error::MethodMissing(method) => {
                write!(f, "variance method '{}' not present on this estimate", method.name())
            }
            Error::PMismatch { left, right } => {
                write!(f, "estimates target different probabilities: {left} vs {right}")
            }
            Error::NonPositiveDensity { value } => {
                write!(f, "density value {value} must be strictly positive and finite")
            }
            Error::ThresholdMismatch => {
                write!(f, "sufficient statistics disagree on threshold or probability")
            }
            Error::InsufficientData => write!(f, "not enough accumulated data to finalize"),
            Error::InvalidResampleCount { b } => {
                write!(f, "bootstrap needs b >= 2 resamples, got {b}")
            }
            Error::InvalidParameter { name, value } => {
                write!(f, "parameter {name} = {value} is out of range")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
