//! Point and variance estimation for bottom-`p` shares of a positive metric.
//!
//! The bottom-`p` share of a positive random variable `X` is the fraction of
//! the total carried by the lowest `p` fraction of the population — the
//! Lorenz curve ordinate at the `p`-th quantile, also known as the first
//! normalized incomplete moment:
//!
//! ```text
//! m(q) = E[X · 1{X ≤ q}] / E[X],   q = F⁻¹(p).
//! ```
//!
//! Given an i.i.d. sample, the plug-in estimator replaces `q` with the sample
//! quantile and both expectations with sample means. Because the sample
//! quantile is itself random, naive variance formulas that treat it as a
//! known constant can be badly biased; this crate provides the corrected
//! closed-form variance alongside the naive one, the classical
//! conditional-moment (Beach–Davidson) form, and a nonparametric bootstrap,
//! so the alternatives can be compared on equal footing.
//!
//! What's here:
//!
//! * [`estimator`] — point estimate, influence terms, the four variance
//!   estimators, Wald confidence intervals, a two-sample test, and the joint
//!   share/quantile covariance;
//! * [`dist`] — closed-form population oracles for log-normal, exponential,
//!   and uniform models, the fixed-vs-estimated variance gap, and inverse-CDF
//!   sampling;
//! * [`stream`] — mergeable sufficient statistics for distributed,
//!   map-reduce style evaluation once the quantile threshold is fixed;
//! * [`bootstrap`] — seeded, stream-per-resample bootstrap;
//! * [`quad`] — adaptive Gauss–Kronrod quadrature for models without closed
//!   forms;
//! * [`normal`] — standard normal CDF/quantile accurate to ~1e-14.
//!
//! The crate is `no_std`-compatible (it requires `alloc`); disable the
//! default `std` feature for freestanding targets.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod bootstrap;
pub mod dist;
mod error;
pub mod estimator;
pub mod normal;
pub mod quad;
pub mod stream;
mod sums;
mod types;

pub use error::{Error, Result};
pub use types::{
    ConfidenceInterval, InfluenceTerms, QuantileMode, Sample, ShareEstimate, ShareQuery,
    TwoSampleTest, VarianceMethod,
};
