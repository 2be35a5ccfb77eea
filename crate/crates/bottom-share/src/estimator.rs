//! Point and variance estimation for bottom-`p` shares from a raw sample.
//!
//! The point estimator is the plug-in
//!
//! ```text
//! m̂(q̂) = Σ xᵢ·1{xᵢ ≤ q̂} / Σ xᵢ,    q̂ = x₍⌊np⌋₎ (1-indexed order statistic),
//! ```
//!
//! and the headline variance estimator is the closed form
//!
//! ```text
//! V̂ = Σ (ŷᵢ − q̂·ẑᵢ)² / (Σ xᵢ)²,
//! ```
//!
//! which accounts for the sampling uncertainty of `q̂` through the joint
//! estimating-equation expansion. `variance_fixed_q` drops the `q̂·ẑᵢ`
//! correction (the common big-data shortcut of treating `q̂` as known),
//! `variance_beach_davidson` evaluates the classical conditional-moment
//! closed form, and [`crate::bootstrap`] resamples the whole pipeline.
//!
//! Conventions baked in here:
//! * `⌊np⌋ = 0` is an error, never a clamp — lower `p` or get more data;
//! * the indicator is inclusive (`xᵢ ≤ q̂`), so ties at the threshold count;
//! * `ẑᵢ` uses the nominal `p`, not the empirical fraction `⌊np⌋/n`. The two
//!   differ by O(1/n); pass the empirical fraction explicitly to the `*_at`
//!   variants when exact agreement with the conditional-moment form matters;
//! * all inner summations are compensated, so 1e-12 relative reproducibility
//!   holds even for million-point samples.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::bootstrap::{self, ResamplePlan};
use crate::error::{Error, Result};
use crate::normal;
use crate::sums::CompensatedSum;
use crate::types::{
    ConfidenceInterval, InfluenceTerms, QuantileMode, Sample, ShareEstimate, ShareQuery,
    TwoSampleTest, VarianceMethod,
};

/// Returns the `⌊np⌋`-th order statistic (1-indexed) of the sample.
///
/// Fails with [`Error::QuantileIndexZero`] when `⌊np⌋ = 0`, i.e. the sample
/// cannot resolve a quantile that low.
pub fn estimate_quantile(sample: &Sample, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability { p });
    }
    let k = (sample.len() as f64 * p).floor() as usize;
    if k == 0 {
        return Err(Error::QuantileIndexZero { n: sample.len(), p });
    }
    let mut buf = sample.values().to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Share of the total carried by observations at or below `q`.
fn share_below(sample: &Sample, q: f64) -> f64 {
    let mut below = CompensatedSum::new();
    for &x in sample.values() {
        if x <= q {
            below.add(x);
        }
    }
    (below.value() / sample.sum()).clamp(0.0, 1.0)
}

/// Point estimate of the bottom-`p` share (no variances attached yet).
pub fn estimate_share(sample: &Sample, query: &ShareQuery) -> Result<ShareEstimate> {
    let quantile = match query.mode() {
        QuantileMode::EstimateFromSample => estimate_quantile(sample, query.p())?,
        QuantileMode::FixedKnown(q) => q,
    };
    Ok(ShareEstimate {
        share: share_below(sample, quantile),
        quantile,
        n: sample.len(),
        p: query.p(),
        variances: BTreeMap::new(),
        degenerate: sample.is_constant(),
    })
}

/// Options for [`estimate`]: which variances to attach and how to bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOptions {
    pub methods: Vec<VarianceMethod>,
    pub bootstrap_b: usize,
    pub seed: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { methods: alloc::vec![VarianceMethod::Proposed], bootstrap_b: 200, seed: 0 }
    }
}

/// Point estimate plus the requested variance estimates.
pub fn estimate(sample: &Sample, query: &ShareQuery, opts: &EstimateOptions) -> Result<ShareEstimate> {
    let mut est = estimate_share(sample, query)?;
    for &method in &opts.methods {
        let v = match method {
            VarianceMethod::Proposed => variance_proposed(sample, &est),
            VarianceMethod::FixedQ => variance_fixed_q(sample, &est),
            VarianceMethod::BeachDavidson => variance_beach_davidson(sample, &est)?,
            VarianceMethod::Bootstrap => {
                let plan = ResamplePlan::new(opts.bootstrap_b, opts.seed)?;
                bootstrap::variance(sample, query, &plan)?
            }
        };
        est.set_variance(method, v);
    }
    Ok(est)
}

/// Per-observation influence terms at the given share, threshold, and
/// nominal probability.
pub fn influence_terms(sample: &Sample, share: f64, quantile: f64, p: f64) -> InfluenceTerms {
    let n = sample.len();
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for &x in sample.values() {
        let a = if x <= quantile { 1.0 } else { 0.0 };
        y.push(x * a - share * x);
        z.push(a - p);
    }
    InfluenceTerms { y, z }
}

/// Closed-form variance accounting for quantile-estimation uncertainty.
///
/// Constant samples report zero variance (the estimator cannot move) even
/// though the raw formula would not; see [`ShareEstimate::degenerate`].
pub fn variance_proposed(sample: &Sample, est: &ShareEstimate) -> f64 {
    variance_proposed_at(sample, est.share, est.quantile, est.p)
}

/// Same as [`variance_proposed`], with the moments supplied explicitly.
pub fn variance_proposed_at(sample: &Sample, share: f64, quantile: f64, p: f64) -> f64 {
    if sample.is_constant() {
        return 0.0;
    }
    let mut ssq = CompensatedSum::new();
    for &x in sample.values() {
        let a = if x <= quantile { 1.0 } else { 0.0 };
        let resid = (x * a - share * x) - quantile * (a - p);
        ssq.add(resid * resid);
    }
    let total = sample.sum();
    ssq.value() / (total * total)
}

/// Naive closed-form variance that treats the threshold as a known constant.
pub fn variance_fixed_q(sample: &Sample, est: &ShareEstimate) -> f64 {
    variance_fixed_q_at(sample, est.share, est.quantile)
}

/// Same as [`variance_fixed_q`], with the moments supplied explicitly.
pub fn variance_fixed_q_at(sample: &Sample, share: f64, quantile: f64) -> f64 {
    if sample.is_constant() {
        return 0.0;
    }
    let mut ssq = CompensatedSum::new();
    for &x in sample.values() {
        let a = if x <= quantile { 1.0 } else { 0.0 };
        let y = x * a - share * x;
        ssq.add(y * y);
    }
    let total = sample.sum();
    ssq.value() / (total * total)
}

/// Classical conditional-moment closed form, evaluated with plug-in moments:
/// empirical `p̂ = s_a/n`, conditional mean and variance of the observations
/// at or below the threshold, and the biased (1/n) sample variance.
pub fn variance_beach_davidson(sample: &Sample, est: &ShareEstimate) -> Result<f64> {
    let q = est.quantile;
    let n = sample.len();
    let mut below_count = 0usize;
    let mut s_xa = CompensatedSum::new();
    let mut s_xxa = CompensatedSum::new();
    let mut s_xx = CompensatedSum::new();
    for &x in sample.values() {
        s_xx.add(x * x);
        if x <= q {
            below_count += 1;
            s_xa.add(x);
            s_xxa.add(x * x);
        }
    }
    if below_count == 0 {
        return Err(Error::DegenerateConditional);
    }
    let nf = n as f64;
    let p_hat = below_count as f64 / nf;
    let mu = sample.mean();
    let sigma_sq = (s_xx.value() / nf - mu * mu).max(0.0);
    let gamma = s_xa.value() / below_count as f64;
    let eps_sq = (s_xxa.value() / below_count as f64 - gamma * gamma).max(0.0);
    // Algebraically a sum of squares; guard the sign against rounding.
    Ok(beach_davidson_from_moments(p_hat, q, mu, sigma_sq, gamma, eps_sq, n).max(0.0))
}

/// The conditional-moment variance formula itself, usable with either
/// plug-in or exact population moments.
///
/// `gamma` is the conditional mean of `X` given `X ≤ q`, `eps_sq` the
/// conditional variance, `sigma_sq` the (population-style) variance of `X`.
pub fn beach_davidson_from_moments(
    p: f64,
    q: f64,
    mu: f64,
    sigma_sq: f64,
    gamma: f64,
    eps_sq: f64,
    n: usize,
) -> f64 {
    let m = p * gamma / mu;
    let bracket = sigma_sq * p * gamma * gamma / (mu * mu)
        + eps_sq * (1.0 - 2.0 * m)
        + (1.0 - p) * (q - gamma) * (q - gamma)
        - 2.0 * m * (q - gamma) * (mu - gamma);
    p * bracket / (n as f64 * mu * mu)
}

/// Wald confidence interval for the share under the given variance method.
pub fn confidence_interval(
    est: &ShareEstimate,
    method: VarianceMethod,
    level: f64,
) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel { level });
    }
    let variance = est.variance(method)?;
    let z = normal::inverse_cdf((1.0 + level) / 2.0);
    let half = z * variance.sqrt();
    Ok(ConfidenceInterval { lower: est.share - half, upper: est.share + half, level, method })
}

/// Two-sample z-test of equal shares; reports the one-sided upper-tail
/// p-value of `(share_a − share_b)/sqrt(V_a + V_b)`.
pub fn two_sample_test(
    a: &ShareEstimate,
    b: &ShareEstimate,
    method: VarianceMethod,
) -> Result<TwoSampleTest> {
    if a.p != b.p {
        return Err(Error::PMismatch { left: a.p, right: b.p });
    }
    let va = a.variance(method)?;
    let vb = b.variance(method)?;
    let diff = a.share - b.share;
    let denom = (va + vb).sqrt();
    let t = if denom > 0.0 {
        diff / denom
    } else if diff == 0.0 {
        0.0
    } else if diff > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    Ok(TwoSampleTest { t_statistic: t, p_value_one_sided: normal::upper_tail(t), method })
}

/// Plug-in estimate of the joint asymptotic covariance of the share and the
/// quantile, scaled to the sample size (i.e. `B/n`).
///
/// The (1,1) entry is [`variance_proposed`] and needs no density. The
/// quantile entries need the density at the threshold, which the caller
/// supplies — analytically in simulations, or approximately via
/// [`kde_density_at`].
pub fn joint_covariance(
    sample: &Sample,
    est: &ShareEstimate,
    density_at_q: f64,
) -> Result<[[f64; 2]; 2]> {
    if density_at_q <= 0.0 || !density_at_q.is_finite() {
        return Err(Error::NonPositiveDensity { value: density_at_q });
    }
    let n = sample.len() as f64;
    let q = est.quantile;
    let f = density_at_q;

    let mut s_yz = CompensatedSum::new();
    let mut s_zz = CompensatedSum::new();
    for &x in sample.values() {
        let a = if x <= q { 1.0 } else { 0.0 };
        let y = x * a - est.share * x;
        let z = a - est.p;
        s_yz.add(y * z);
        s_zz.add(z * z);
    }
    let e_yz = s_yz.value() / n;
    let e_zz = s_zz.value() / n;
    let mu = sample.mean();

    let v_share = variance_proposed(sample, est);
    let v_quantile = est.p * (1.0 - est.p) / (n * f * f);
    let cov = -(e_yz + q * f * e_zz) / (n * mu * f);
    Ok([[v_share, cov], [cov, v_quantile]])
}

/// Gaussian-kernel density estimate at `x` with the Silverman rule-of-thumb
/// bandwidth `1.06·σ̂·n^{-1/5}`.
///
/// This is approximate plumbing for [`joint_covariance`] when no analytic
/// density is available; it is not tuned beyond the rule of thumb. Returns
/// NaN for constant samples (zero bandwidth).
pub fn kde_density_at(sample: &Sample, x: f64) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.mean();
    let mut ss = CompensatedSum::new();
    for &v in sample.values() {
        ss.add((v - mean) * (v - mean));
    }
    let sd = (ss.value() / (n - 1.0)).sqrt();
    let h = 1.06 * sd * n.powf(-0.2);
    if h <= 0.0 || h.is_nan() {
        return f64::NAN;
    }
    let mut acc = CompensatedSum::new();
    for &v in sample.values() {
        acc.add(normal::pdf((x - v) / h));
    }
    acc.value() / (n * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ShareQuery;
    use alloc::vec;

    fn hand_sample() -> Sample {
        Sample::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn quantile_order_statistic() {
        let s = hand_sample();
        assert_eq!(estimate_quantile(&s, 0.5).unwrap(), 2.0);
        assert_eq!(estimate_quantile(&s, 0.25).unwrap(), 1.0);
        assert_eq!(
            estimate_quantile(&s, 0.1).unwrap_err(),
            Error::QuantileIndexZero { n: 4, p: 0.1 }
        );
    }

    #[test]
    fn quantile_ignores_input_order() {
        let s = Sample::new(vec![4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(estimate_quantile(&s, 0.5).unwrap(), 2.0);
        assert_eq!(estimate_quantile(&s, 0.75).unwrap(), 3.0);
    }

    #[test]
    fn share_hand_values() {
        let s = hand_sample();
        let est = estimate_share(&s, &ShareQuery::estimated(0.5).unwrap()).unwrap();
        assert_eq!(est.quantile, 2.0);
        assert!((est.share - 0.3).abs() < 1e-15);

        // floor(4·0.99) = 3 → q̂ = 3, share = (1+2+3)/10
        let est = estimate_share(&s, &ShareQuery::estimated(0.99).unwrap()).unwrap();
        assert_eq!(est.quantile, 3.0);
        assert!((est.share - 0.6).abs() < 1e-15);
    }

    #[test]
    fn share_with_fixed_threshold() {
        let s = hand_sample();
        let est = estimate_share(&s, &ShareQuery::fixed(0.5, 2.5).unwrap()).unwrap();
        assert_eq!(est.quantile, 2.5);
        assert!((est.share - 0.3).abs() < 1e-15);
    }

    #[test]
    fn influence_hand_values() {
        let s = hand_sample();
        let t = influence_terms(&s, 0.3, 2.0, 0.5);
        let want_y = [0.7, 1.4, -0.9, -1.2];
        let want_z = [0.5, 0.5, -0.5, -0.5];
        for i in 0..4 {
            assert!((t.y[i] - want_y[i]).abs() < 1e-15, "y[{i}]");
            assert!((t.z[i] - want_z[i]).abs() < 1e-15, "z[{i}]");
        }
        let sum_y: f64 = t.y.iter().sum();
        assert!(sum_y.abs() <= 1e-12 * s.sum());
    }

    #[test]
    fn influence_all_below_threshold() {
        let s = hand_sample();
        let t = influence_terms(&s, 1.0, 10.0, 0.5);
        assert!(t.y.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn variance_hand_values() {
        let s = hand_sample();
        let est = estimate_share(&s, &ShareQuery::estimated(0.5).unwrap()).unwrap();
        assert!((variance_proposed(&s, &est) - 0.0030).abs() < 1e-12);
        assert!((variance_fixed_q(&s, &est) - 0.047).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_reports_zero_variance() {
        // A constant sample always yields share 1; the estimator cannot
        // move, so dispersion variances are forced to zero.
        let s = Sample::new(vec![5.0, 5.0, 5.0, 5.0]).unwrap();
        let est = estimate_share(&s, &ShareQuery::estimated(0.5).unwrap()).unwrap();
        assert!(est.degenerate);
        assert_eq!(variance_proposed(&s, &est), 0.0);
        assert_eq!(variance_fixed_q(&s, &est), 0.0);
    }

    #[test]
    fn beach_davidson_matches_proposed_under_empirical_p() {
        // With the empirical fraction substituted for the nominal p, the two
        // closed forms are algebraically identical.
        let s = Sample::new(vec![1.0, 2.0, 3.0, 4.0, 7.0, 0.5, 2.5]).unwrap();
        let est = estimate_share(&s, &ShareQuery::estimated(0.6).unwrap()).unwrap();
        let below = s.values().iter().filter(|&&x| x <= est.quantile).count();
        let p_hat = below as f64 / s.len() as f64;
        let proposed_emp = variance_proposed_at(&s, est.share, est.quantile, p_hat);
        let bd = variance_beach_davidson(&s, &est).unwrap();
        assert!(
            (bd - proposed_emp).abs() <= 1e-6 * proposed_emp.abs(),
            "bd = {bd}, proposed(empirical p) = {proposed_emp}"
        );
    }

    #[test]
    fn beach_davidson_hand_sample_equals_proposed() {
        // p = 0.5 on four points: the empirical fraction equals the nominal
        // p, so both estimators coincide on the hand example.
        let s = hand_sample();
        let est = estimate_share(&s, &ShareQuery::estimated(0.5).unwrap()).unwrap();
        let bd = variance_beach_davidson(&s, &est).unwrap();
        assert!((bd - 0.0030).abs() < 1e-15);
    }

    #[test]
    fn beach_davidson_all_below_is_zero() {
        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let est = estimate_share(&s, &ShareQuery::fixed(0.9, 10.0).unwrap()).unwrap();
        assert_eq!(est.share, 1.0);
        let bd = variance_beach_davidson(&s, &est).unwrap();
        assert!(bd.abs() < 1e-18);
        // The variance form with a consistent (empirical) p agrees.
        assert_eq!(variance_proposed_at(&s, 1.0, 10.0, 1.0), 0.0);
    }

    #[test]
    fn beach_davidson_degenerate_conditional() {
        let s = Sample::new(vec![2.0, 3.0, 4.0]).unwrap();
        let est = estimate_share(&s, &ShareQuery::fixed(0.5, 1.0).unwrap()).unwrap();
        assert_eq!(
            variance_beach_davidson(&s, &est).unwrap_err(),
            Error::DegenerateConditional
        );
    }

    #[test]
    fn confidence_interval_hand_values() {
        let mut est = estimate_share(&hand_sample(), &ShareQuery::estimated(0.5).unwrap()).unwrap();
        est.share = 0.5;
        est.set_variance(VarianceMethod::Proposed, 1e-4);
        let ci = confidence_interval(&est, VarianceMethod::Proposed, 0.95).unwrap();
        assert!((ci.lower - 0.48040036015459947).abs() < 1e-12);
        assert!((ci.upper - 0.5195996398454006).abs() < 1e-12);
        assert!(ci.contains(est.share));

        est.set_variance(VarianceMethod::Proposed, 0.0);
        let ci = confidence_interval(&est, VarianceMethod::Proposed, 0.95).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.5, 0.5));

        assert_eq!(
            confidence_interval(&est, VarianceMethod::Bootstrap, 0.95).unwrap_err(),
            Error::MethodMissing(VarianceMethod::Bootstrap)
        );
        assert!(confidence_interval(&est, VarianceMethod::Proposed, 1.0).is_err());
    }

    #[test]
    fn two_sample_hand_values() {
        let base = estimate_share(&hand_sample(), &ShareQuery::estimated(0.75).unwrap()).unwrap();

        let mut a = base.clone();
        a.share = 0.541;
        a.set_variance(VarianceMethod::Proposed, 3.34e-6);
        a.set_variance(VarianceMethod::FixedQ, 1.96e-5);
        let mut b = base.clone();
        b.share = 0.530;
        b.set_variance(VarianceMethod::Proposed, 1.42e-5);
        b.set_variance(VarianceMethod::FixedQ, 6.01e-5);

        let t1 = two_sample_test(&a, &b, VarianceMethod::Proposed).unwrap();
        assert!((t1.t_statistic - 2.6).abs() < 0.05, "t = {}", t1.t_statistic);
        let t2 = two_sample_test(&a, &b, VarianceMethod::FixedQ).unwrap();
        assert!((t2.t_statistic - 1.2).abs() < 0.05, "t = {}", t2.t_statistic);

        let same = two_sample_test(&a, &a, VarianceMethod::Proposed).unwrap();
        assert_eq!(same.t_statistic, 0.0);
        assert!((same.p_value_one_sided - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_sample_p_mismatch() {
        let a = estimate_share(&hand_sample(), &ShareQuery::estimated(0.5).unwrap()).unwrap();
        let b = estimate_share(&hand_sample(), &ShareQuery::estimated(0.75).unwrap()).unwrap();
        assert!(matches!(
            two_sample_test(&a, &b, VarianceMethod::Proposed).unwrap_err(),
            Error::PMismatch { .. }
        ));
    }

    #[test]
    fn joint_covariance_is_symmetric_and_rejects_bad_density() {
        let s = hand_sample();
        let est = estimate_share(&s, &ShareQuery::estimated(0.5).unwrap()).unwrap();
        let m = joint_covariance(&s, &est, 0.3).unwrap();
        assert_eq!(m[0][1], m[1][0]);
        assert!((m[0][0] - variance_proposed(&s, &est)).abs() < 1e-18);
        assert!(matches!(
            joint_covariance(&s, &est, 0.0).unwrap_err(),
            Error::NonPositiveDensity { .. }
        ));
    }

    #[test]
    fn joint_covariance_quantile_entry_textbook_value() {
        let s = hand_sample();
        let est = estimate_share(&s, &ShareQuery::estimated(0.5).unwrap()).unwrap();
        // p(1-p)/(n f²) with p = 0.5, n = 4, f = 1.
        let m = joint_covariance(&s, &est, 1.0).unwrap();
        assert!((m[1][1] - 0.25 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn joint_covariance_quantile_entry_exponential_density() {
        // At p = 0.75 with the Exp(1) density f(q) = 0.25 the quantile
        // entry is 0.1875/(n·0.0625) = 3/n regardless of the sample values.
        let s = Sample::new(vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]).unwrap();
        let est = estimate_share(&s, &ShareQuery::estimated(0.75).unwrap()).unwrap();
        let m = joint_covariance(&s, &est, 0.25).unwrap();
        let n = s.len() as f64;
        assert!((m[1][1] - 3.0 / n).abs() <= 1e-12 * (3.0 / n));
    }

    #[test]
    fn estimate_attaches_requested_methods() {
        let s = hand_sample();
        let q = ShareQuery::estimated(0.5).unwrap();
        let opts = EstimateOptions {
            methods: vec![
                VarianceMethod::Proposed,
                VarianceMethod::FixedQ,
                VarianceMethod::BeachDavidson,
                VarianceMethod::Bootstrap,
            ],
            bootstrap_b: 50,
            seed: 9,
        };
        let est = estimate(&s, &q, &opts).unwrap();
        for m in opts.methods {
            assert!(est.variance(m).unwrap() >= 0.0);
        }
    }

    #[test]
    fn kde_is_a_density_like_curve() {
        let s = Sample::new(vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]).unwrap();
        let d = kde_density_at(&s, 2.5);
        assert!(d > 0.0);
        // Far away from the data the estimate decays.
        assert!(kde_density_at(&s, 50.0) < d);
    }
}
