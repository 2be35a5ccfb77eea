//! Closed-form population oracles for log-normal, exponential, and uniform
//! models.
//!
//! These supply exact population quantities — quantiles, bottom-`p` shares,
//! incomplete moments, the asymptotic variance of the share estimator, and
//! the gap between the fixed-threshold and estimated-threshold variances —
//! for use as ground truth in simulations and tests, plus inverse-CDF
//! sampling for Monte Carlo work.
//!
//! A note on notation: the log-normal is parameterized by the mean and
//! standard deviation of `ln X` (written `mu`, `sigma` here), which are
//! *not* the mean and standard deviation of `X` itself. The population mean
//! of `X` is `exp(mu + sigma²/2)`.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use core::fmt;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::normal;

/// A parametric positive-valued model with closed-form population
/// quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionModel {
    /// `ln X ~ N(mu, sigma²)`.
    LogNormal { mu: f64, sigma: f64 },
    /// Density `lambda·exp(-lambda·x)` on `(0, ∞)`.
    Exponential { lambda: f64 },
    /// Uniform on `(0, upper)`.
    Uniform { upper: f64 },
}

use DistributionModel::{Exponential, LogNormal, Uniform};

impl DistributionModel {
    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter { name: "mu", value: mu });
        }
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParameter { name: "sigma", value: sigma });
        }
        Ok(LogNormal { mu, sigma })
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParameter { name: "lambda", value: lambda });
        }
        Ok(Exponential { lambda })
    }

    pub fn uniform(upper: f64) -> Result<Self> {
        if upper <= 0.0 || !upper.is_finite() {
            return Err(Error::InvalidParameter { name: "upper", value: upper });
        }
        Ok(Uniform { upper })
    }

    /// Population mean of `X`.
    pub fn mean(&self) -> f64 {
        match *self {
            LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Exponential { lambda } => 1.0 / lambda,
            Uniform { upper } => 0.5 * upper,
        }
    }

    /// Population second raw moment `E[X²]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            LogNormal { mu, sigma } => (2.0 * mu + 2.0 * sigma * sigma).exp(),
            Exponential { lambda } => 2.0 / (lambda * lambda),
            Uniform { upper } => upper * upper / 3.0,
        }
    }

    /// Population variance of `X`.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.second_moment() - mu * mu
    }

    /// Probability density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            LogNormal { mu, sigma } => {
                let z = (x.ln() - mu) / sigma;
                normal::pdf(z) / (x * sigma)
            }
            Exponential { lambda } => lambda * (-lambda * x).exp(),
            Uniform { upper } => {
                if x < upper {
                    1.0 / upper
                } else {
                    0.0
                }
            }
        }
    }

    /// Cumulative distribution function at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            LogNormal { mu, sigma } => normal::cdf((x.ln() - mu) / sigma),
            Exponential { lambda } => -(-lambda * x).exp_m1(),
            Uniform { upper } => (x / upper).min(1.0),
        }
    }

    /// Population quantile `F⁻¹(p)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { p });
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        match *self {
            LogNormal { mu, sigma } => (mu + sigma * normal::inverse_cdf(p)).exp(),
            Exponential { lambda } => -(-p).ln_1p() / lambda,
            Uniform { upper } => p * upper,
        }
    }

    /// Population bottom-`p` share `m(F⁻¹(p))`.
    ///
    /// Scale parameters cancel: the exponential share does not depend on
    /// `lambda` and the uniform share (`p²`) not on `upper`.
    pub fn bottom_share(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { p });
        }
        Ok(match *self {
            LogNormal { sigma, .. } => normal::cdf(normal::inverse_cdf(p) - sigma),
            Exponential { .. } => {
                // m = 1 − e^{-t}(1+t) with t = −ln(1−p); since e^{-t} = 1−p
                // this collapses to p + t(p−1), which stays accurate as p→0.
                let t = -(-p).ln_1p();
                p + t * (p - 1.0)
            }
            Uniform { .. } => p * p,
        })
    }

    /// Partial first moment `E[X·1{X ≤ q}]`.
    pub fn incomplete_first_moment(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        match *self {
            LogNormal { mu, sigma } => {
                self.mean() * normal::cdf((q.ln() - mu - sigma * sigma) / sigma)
            }
            Exponential { lambda } => {
                let t = lambda * q;
                let u = -(-t).exp_m1();
                (u * (1.0 + t) - t) / lambda
            }
            Uniform { upper } => {
                let q = q.min(upper);
                q * q / (2.0 * upper)
            }
        }
    }

    /// Partial second moment `E[X²·1{X ≤ q}]`.
    pub fn incomplete_second_moment(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        match *self {
            LogNormal { mu, sigma } => {
                self.second_moment() * normal::cdf((q.ln() - mu - 2.0 * sigma * sigma) / sigma)
            }
            Exponential { lambda } => {
                let t = lambda * q;
                let u = -(-t).exp_m1();
                (2.0 * u - (-t).exp() * t * (t + 2.0)) / (lambda * lambda)
            }
            Uniform { upper } => {
                let q = q.min(upper);
                q * q * q / (3.0 * upper)
            }
        }
    }

    /// Population asymptotic variance of the share estimator with the
    /// quantile estimated from the sample: `E[(Y − qZ)²]/(n·μ²)`.
    pub fn share_variance(&self, p: f64, n: usize) -> Result<f64> {
        let moments = self.score_moments(p)?;
        Ok(moments.residual_second_moment() / (n as f64 * moments.mu * moments.mu))
    }

    /// Population variance of the share estimator when the threshold is
    /// (correctly) known and fixed: `E[Y²]/(n·μ²)`.
    pub fn fixed_q_share_variance(&self, p: f64, n: usize) -> Result<f64> {
        let moments = self.score_moments(p)?;
        Ok(moments.e_y_sq / (n as f64 * moments.mu * moments.mu))
    }

    /// Difference between the fixed-threshold and estimated-threshold
    /// variances, `q·[2m(1−m)μ − q·p(1−p)]/(n·μ²)`.
    ///
    /// For the uniform family this collapses to `4p⁴(1−p)/n`; for the
    /// exponential family it is non-negative for every `lambda` and `p`
    /// (see [`h_function`]). No sign claim is made for the log-normal.
    pub fn variance_gap(&self, p: f64, n: usize) -> Result<f64> {
        let ScoreMoments { q, mu, m, .. } = self.score_moments(p)?;
        Ok(q * (2.0 * m * (1.0 - m) * mu - q * p * (1.0 - p)) / (n as f64 * mu * mu))
    }

    fn score_moments(&self, p: f64) -> Result<ScoreMoments> {
        let q = self.quantile(p)?;
        let mu = self.mean();
        let m = self.bottom_share(p)?;
        let i2 = self.incomplete_second_moment(q);
        let e_y_sq = (1.0 - 2.0 * m) * i2 + m * m * self.second_moment();
        let e_yz = m * (1.0 - m) * mu;
        let e_z_sq = p * (1.0 - p);
        Ok(ScoreMoments { q, mu, m, e_y_sq, e_yz, e_z_sq })
    }

    /// Draws `n` observations by inverse-CDF transform of open-interval
    /// uniforms. Deterministic given the generator state.
    pub fn sample_with<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        self.extend_sample(n, rng, &mut out);
        out
    }

    /// Appends `n` inverse-CDF draws to `out`.
    pub fn extend_sample<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<f64>) {
        out.reserve(n);
        for _ in 0..n {
            out.push(self.quantile_unchecked(open_unit(rng)));
        }
    }
}

/// Uniform draw on the open interval (0, 1): 53 random bits centered within
/// their spacing, so neither endpoint can occur and `ln`/`Φ⁻¹` stay finite.
fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

struct ScoreMoments {
    q: f64,
    mu: f64,
    m: f64,
    e_y_sq: f64,
    e_yz: f64,
    e_z_sq: f64,
}

impl ScoreMoments {
    fn residual_second_moment(&self) -> f64 {
        self.e_y_sq - 2.0 * self.q * self.e_yz + self.q * self.q * self.e_z_sq
    }
}

impl fmt::Display for DistributionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LogNormal { mu, sigma } => write!(f, "LogNormal({mu}, {sigma})"),
            Exponential { lambda } => write!(f, "Exponential({lambda})"),
            Uniform { upper } => write!(f, "Uniform(0, {upper})"),
        }
    }
}

/// `h(t) = 2(eᵗ − 1 − t)(1 + t) − t(eᵗ − 1)`.
///
/// Up to positive factors this is the fixed-vs-estimated variance gap of the
/// exponential family at `t = λq`; it is non-negative on `[0, ∞)`, which is
/// what makes the gap non-negative for every exponential configuration.
/// Below `t = 1e-4` the direct form loses everything to cancellation, so a
/// series expansion takes over:
///
/// ```text
/// h(t) = (5/6)t³ + (1/4)t⁴ + (7/120)t⁵ + (1/90)t⁶ + O(t⁷)
/// ```
pub fn h_function(t: f64) -> f64 {
    if t < 1e-4 {
        let c6 = 1.0 / 90.0;
        let c5 = 7.0 / 120.0;
        let c4 = 0.25;
        let c3 = 5.0 / 6.0;
        t * t * t * (c3 + t * (c4 + t * (c5 + t * c6)))
    } else {
        let em1 = t.exp_m1();
        2.0 * (em1 - t) * (1.0 + t) - t * em1
    }
}
