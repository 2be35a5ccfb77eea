//! Domain types shared across the estimation modules.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::sums;

/// A validated sample of strictly positive, finite observations.
///
/// Construction checks every value and requires at least two observations;
/// all downstream operations can then assume a well-formed input. The
/// original observation order is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    sum: f64,
    constant: bool,
}

impl Sample {
    /// Validates and wraps a vector of observations.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooFewObservations { n: values.len() });
        }
        for &v in &values {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::NonPositiveObservation { value: v });
            }
        }
        let sum = sums::total(values.iter().copied());
        let first = values[0];
        let constant = values.iter().all(|&v| v == first);
        Ok(Self { values, sum, constant })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Compensated total of the observations.
    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.values.len() as f64
    }

    /// True when every observation is identical. Dispersion-based variances
    /// are reported as zero for such samples.
    pub fn is_constant(&self) -> bool {
        self.constant
    }
}

/// How the quantile threshold is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantileMode {
    /// Use the `floor(n·p)`-th order statistic of the sample.
    EstimateFromSample,
    /// Treat the supplied threshold as a known constant.
    FixedKnown(f64),
}

/// A share query: target probability plus the quantile convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareQuery {
    p: f64,
    mode: QuantileMode,
}

impl ShareQuery {
    /// Bottom-`p` share with the quantile estimated from the sample.
    pub fn estimated(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { p });
        }
        Ok(Self { p, mode: QuantileMode::EstimateFromSample })
    }

    /// Bottom-`p` share with a known, fixed threshold `q`.
    pub fn fixed(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { p });
        }
        if q <= 0.0 || !q.is_finite() {
            return Err(Error::NonPositiveQuantile { q });
        }
        Ok(Self { p, mode: QuantileMode::FixedKnown(q) })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mode(&self) -> QuantileMode {
        self.mode
    }
}

/// The variance estimators this crate knows how to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarianceMethod {
    /// Closed form accounting for quantile-estimation uncertainty.
    Proposed,
    /// Naive closed form treating the estimated quantile as a constant.
    FixedQ,
    /// Classical conditional-moment (Beach–Davidson) closed form.
    BeachDavidson,
    /// Nonparametric bootstrap with the quantile re-estimated per resample.
    Bootstrap,
}

impl VarianceMethod {
    pub const ALL: [VarianceMethod; 4] = [
        VarianceMethod::Proposed,
        VarianceMethod::FixedQ,
        VarianceMethod::BeachDavidson,
        VarianceMethod::Bootstrap,
    ];

    /// Stable identifier used in CLI flags and JSON output.
    pub fn name(&self) -> &'static str {
        match self {
            VarianceMethod::Proposed => "proposed",
            VarianceMethod::FixedQ => "fixed_q",
            VarianceMethod::BeachDavidson => "beach_davidson",
            VarianceMethod::Bootstrap => "bootstrap",
        }
    }
}

impl fmt::Display for VarianceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VarianceMethod {
    type Err = ();

    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        match s {
            "proposed" => Ok(VarianceMethod::Proposed),
            "fixed_q" | "fixed-q" | "fixedq" => Ok(VarianceMethod::FixedQ),
            "beach_davidson" | "beach-davidson" | "bd" => Ok(VarianceMethod::BeachDavidson),
            "bootstrap" | "boot" => Ok(VarianceMethod::Bootstrap),
            _ => Err(()),
        }
    }
}

/// Point estimate of a bottom-`p` share together with any variance
/// estimates computed for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareEstimate {
    /// Estimated share, in [0, 1].
    pub share: f64,
    /// Quantile threshold the share was taken against.
    pub quantile: f64,
    /// Number of observations.
    pub n: usize,
    /// Nominal target probability.
    pub p: f64,
    /// Variance estimates keyed by method.
    pub variances: BTreeMap<VarianceMethod, f64>,
    /// Set when the sample was constant; dispersion variances are forced to
    /// zero in that case because the estimator cannot move.
    pub degenerate: bool,
}

impl ShareEstimate {
    pub fn variance(&self, method: VarianceMethod) -> Result<f64> {
        self.variances.get(&method).copied().ok_or(Error::MethodMissing(method))
    }

    pub fn set_variance(&mut self, method: VarianceMethod, value: f64) {
        self.variances.insert(method, value);
    }

    /// Standard error under the given method.
    pub fn standard_error(&self, method: VarianceMethod) -> Result<f64> {
        Ok(self.variance(method)?.sqrt())
    }
}

/// Per-observation influence terms of the augmented estimating equation.
///
/// `y[i] = x_i·1{x_i ≤ q} − m·x_i` carries the share part, and
/// `z[i] = 1{x_i ≤ q} − p` the quantile part. When `m` is the plug-in share
/// the `y` terms sum to zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceTerms {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// A Wald confidence interval for the share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: VarianceMethod,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Result of a two-sample comparison of shares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleTest {
    /// `(share_a − share_b) / sqrt(V_a + V_b)`.
    pub t_statistic: f64,
    /// Standard normal upper-tail probability of the statistic.
    pub p_value_one_sided: f64,
    /// Variance method both inputs were judged under.
    pub method: VarianceMethod,
}
