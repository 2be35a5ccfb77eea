//! Standard normal density, CDF, and quantile function.
//!
//! The CDF goes through the complementary error function, which keeps the
//! far tails relatively accurate. The quantile uses Acklam's rational
//! approximation polished by one Halley step against the CDF, landing well
//! inside 1e-12 of the true value across the usable range of `f64`
//! probabilities.

#[allow(unused_imports)]
use num_traits::Float;

use core::f64::consts::SQRT_2;

const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;

/// Density of the standard normal distribution.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() * FRAC_1_SQRT_2PI
}

/// CDF of the standard normal distribution.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Upper tail probability `P(Z > x)`, accurate for large `x`.
pub fn upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

// Acklam's coefficients for the rational initial guess.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.38357751867269e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

/// Quantile (inverse CDF) of the standard normal distribution.
///
/// Returns `-inf` for `p <= 0`, `+inf` for `p >= 1`, and NaN for NaN input.
pub fn inverse_cdf(p: f64) -> f64 {
    if p.is_nan() {
        return f64::NAN;
    }
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }

    let x = if p < P_LOW {
        lower_tail_guess(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -lower_tail_guess(1.0 - p)
    };

    halley_refine(x, p)
}

fn lower_tail_guess(p: f64) -> f64 {
    let q = (-2.0 * p.ln()).sqrt();
    (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
        / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
}

/// One Halley iteration of `cdf(x) = p`; cuts the ~1e-9 relative error of
/// the rational guess down to the noise floor of `cdf` itself.
fn halley_refine(x: f64, p: f64) -> f64 {
    let d = pdf(x);
    if d <= 0.0 || !d.is_finite() {
        return x; // beyond f64 density support; keep the rational guess
    }
    // Compare against whichever tail is smaller to dodge cancellation.
    let e = if p < 0.5 { cdf(x) - p } else { (1.0 - p) - upper_tail(x) };
    let u = e / d;
    x - u / (1.0 + x * u / 2.0)
}
