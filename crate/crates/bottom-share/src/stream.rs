//! Mergeable sufficient statistics for distributed share estimation.
//!
//! Once a first pass has fixed the quantile threshold `q`, the point
//! estimate and both closed-form variances are functions of six shard-local
//! sums:
//!
//! ```text
//! n,  s_x = Σx,  s_xx = Σx²,  s_xa = Σx·1{x≤q},  s_xxa = Σx²·1{x≤q},  s_a = Σ1{x≤q}
//! ```
//!
//! Accumulators over disjoint shards merge by componentwise addition, so the
//! whole computation maps onto a map-reduce: one broadcast of `(q, p)`, one
//! accumulate pass per shard, a tree of merges, one `finalize`. Sums are
//! compensated, which keeps finalized results within 1e-12 relative of the
//! single-pass batch computation even at millions of points, and makes the
//! merge insensitive to association order.
//!
//! Exact quantile computation is deliberately out of scope here: the
//! accumulator's contract begins once `q` is fixed. (Approximate quantile
//! sketches would break the exact-agreement-with-batch guarantee.)

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sums::CompensatedSum;
use crate::types::{ShareEstimate, VarianceMethod};

/// Shard-local sufficient statistics taken against a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientStats {
    n: u64,
    s_x: CompensatedSum,
    s_xx: CompensatedSum,
    s_xa: CompensatedSum,
    s_xxa: CompensatedSum,
    s_a: u64,
    q: f64,
    p: f64,
}

impl SufficientStats {
    /// Empty accumulator against threshold `q` and nominal probability `p`.
    pub fn new(q: f64, p: f64) -> Result<Self> {
        if q <= 0.0 || !q.is_finite() {
            return Err(Error::NonPositiveQuantile { q });
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { p });
        }
        Ok(Self {
            n: 0,
            s_x: CompensatedSum::new(),
            s_xx: CompensatedSum::new(),
            s_xa: CompensatedSum::new(),
            s_xxa: CompensatedSum::new(),
            s_a: 0,
            q,
            p,
        })
    }

    /// Rebuilds an accumulator from serialized sums (compensation terms are
    /// not part of the wire format).
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw(
        n: u64,
        s_x: f64,
        s_xx: f64,
        s_xa: f64,
        s_xxa: f64,
        s_a: u64,
        q: f64,
        p: f64,
    ) -> Self {
        Self {
            n,
            s_x: CompensatedSum::from_value(s_x),
            s_xx: CompensatedSum::from_value(s_xx),
            s_xa: CompensatedSum::from_value(s_xa),
            s_xxa: CompensatedSum::from_value(s_xxa),
            s_a,
            q,
            p,
        }
    }

    /// Folds one observation into the accumulator.
    pub fn accumulate(&mut self, x: f64) -> Result<()> {
        if x <= 0.0 || !x.is_finite() {
            return Err(Error::NonPositiveObservation { value: x });
        }
        self.n += 1;
        self.s_x.add(x);
        self.s_xx.add(x * x);
        if x <= self.q {
            self.s_a += 1;
            self.s_xa.add(x);
            self.s_xxa.add(x * x);
        }
        Ok(())
    }

    /// Folds a slice of observations into the accumulator.
    pub fn extend(&mut self, values: &[f64]) -> Result<()> {
        for &x in values {
            self.accumulate(x)?;
        }
        Ok(())
    }

    /// Componentwise combination of two accumulators over disjoint shards.
    ///
    /// Requires bit-identical `q` and `p`; a shard summed against a
    /// different threshold measures a different quantity.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = *self;
        out.merge_in_place(other)?;
        Ok(out)
    }

    pub fn merge_in_place(&mut self, other: &Self) -> Result<()> {
        if self.q != other.q || self.p != other.p {
            return Err(Error::ThresholdMismatch);
        }
        self.n += other.n;
        self.s_a += other.s_a;
        self.s_x.merge(&other.s_x);
        self.s_xx.merge(&other.s_xx);
        self.s_xa.merge(&other.s_xa);
        self.s_xxa.merge(&other.s_xxa);
        Ok(())
    }

    /// Point estimate plus the two closed-form variances, reconstructed from
    /// the six sums alone.
    ///
    /// The residual sum of squares expands exactly because the indicator is
    /// idempotent (`a² = a`):
    ///
    /// ```text
    /// Σ(x·a − m·x − q·a + q·p)² = s_xxa(1−2m) + m²·s_xx
    ///                           + q²·(s_a(1−2p) + n·p²)
    ///                           + 2q·(s_xa(m+p−1) − m·p·s_x)
    /// ```
    ///
    /// and `Σŷ² = s_xxa(1−2m) + m²·s_xx`.
    pub fn finalize(&self) -> Result<ShareEstimate> {
        if self.n < 2 {
            return Err(Error::InsufficientData);
        }
        let n = self.n as f64;
        let s_x = self.s_x.value();
        if s_x <= 0.0 || s_x.is_nan() {
            return Err(Error::InsufficientData);
        }
        let s_xx = self.s_xx.value();
        let s_xa = self.s_xa.value();
        let s_xxa = self.s_xxa.value();
        let s_a = self.s_a as f64;
        let (q, p) = (self.q, self.p);

        let m = (s_xa / s_x).clamp(0.0, 1.0);

        // All observations identical ⇔ zero sample variance of x.
        let degenerate = (n * s_xx - s_x * s_x).abs() <= 1e-12 * s_x * s_x;

        let (proposed, fixed_q) = if degenerate {
            (0.0, 0.0)
        } else {
            let ssq_resid = s_xxa * (1.0 - 2.0 * m)
                + m * m * s_xx
                + q * q * (s_a * (1.0 - 2.0 * p) + n * p * p)
                + 2.0 * q * (s_xa * (m + p - 1.0) - m * p * s_x);
            let ssq_y = s_xxa * (1.0 - 2.0 * m) + m * m * s_xx;
            (ssq_resid.max(0.0) / (s_x * s_x), ssq_y.max(0.0) / (s_x * s_x))
        };

        let mut variances = BTreeMap::new();
        variances.insert(VarianceMethod::Proposed, proposed);
        variances.insert(VarianceMethod::FixedQ, fixed_q);
        Ok(ShareEstimate {
            share: m,
            quantile: q,
            n: self.n as usize,
            p,
            variances,
            degenerate,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s_x(&self) -> f64 {
        self.s_x.value()
    }

    pub fn s_xx(&self) -> f64 {
        self.s_xx.value()
    }

    pub fn s_xa(&self) -> f64 {
        self.s_xa.value()
    }

    pub fn s_xxa(&self) -> f64 {
        self.s_xxa.value()
    }

    pub fn s_a(&self) -> u64 {
        self.s_a
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator;
    use crate::types::{Sample, ShareQuery};
    use alloc::vec::Vec;

    #[test]
    fn accumulate_single_elements() {
        let mut below = SufficientStats::new(2.0, 0.5).unwrap();
        below.accumulate(1.0).unwrap();
        assert_eq!(below.n(), 1);
        assert_eq!(below.s_x(), 1.0);
        assert_eq!(below.s_xx(), 1.0);
        assert_eq!(below.s_xa(), 1.0);
        assert_eq!(below.s_xxa(), 1.0);
        assert_eq!(below.s_a(), 1);

        let mut above = SufficientStats::new(2.0, 0.5).unwrap();
        above.accumulate(3.0).unwrap();
        assert_eq!(above.s_x(), 3.0);
        assert_eq!(above.s_xx(), 9.0);
        assert_eq!(above.s_xa(), 0.0);
        assert_eq!(above.s_xxa(), 0.0);
        assert_eq!(above.s_a(), 0);
    }

    #[test]
    fn accumulate_rejects_nonpositive() {
        let mut acc = SufficientStats::new(2.0, 0.5).unwrap();
        assert!(matches!(
            acc.accumulate(0.0).unwrap_err(),
            Error::NonPositiveObservation { .. }
        ));
        assert!(matches!(
            acc.accumulate(-1.0).unwrap_err(),
            Error::NonPositiveObservation { .. }
        ));
    }

    #[test]
    fn fold_hand_values() {
        let mut acc = SufficientStats::new(2.0, 0.5).unwrap();
        acc.extend(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(acc.s_x(), 10.0);
        assert_eq!(acc.s_xx(), 30.0);
        assert_eq!(acc.s_xa(), 3.0);
        assert_eq!(acc.s_xxa(), 5.0);
        assert_eq!(acc.s_a(), 2);
    }

    #[test]
    fn merge_equals_concatenation_and_identity() {
        let mut left = SufficientStats::new(2.0, 0.5).unwrap();
        left.extend(&[1.0, 2.0]).unwrap();
        let mut right = SufficientStats::new(2.0, 0.5).unwrap();
        right.extend(&[3.0, 4.0]).unwrap();
        let merged = left.merge(&right).unwrap();

        let mut whole = SufficientStats::new(2.0, 0.5).unwrap();
        whole.extend(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(merged.s_x(), whole.s_x());
        assert_eq!(merged.s_xxa(), whole.s_xxa());
        assert_eq!(merged.n(), whole.n());

        let empty = SufficientStats::new(2.0, 0.5).unwrap();
        assert_eq!(whole.merge(&empty).unwrap(), whole);
    }

    #[test]
    fn merge_rejects_mismatched_thresholds() {
        let a = SufficientStats::new(2.0, 0.5).unwrap();
        let b = SufficientStats::new(3.0, 0.5).unwrap();
        assert_eq!(a.merge(&b).unwrap_err(), Error::ThresholdMismatch);
        let c = SufficientStats::new(2.0, 0.25).unwrap();
        assert_eq!(a.merge(&c).unwrap_err(), Error::ThresholdMismatch);
    }

    #[test]
    fn finalize_hand_values() {
        let mut acc = SufficientStats::new(2.0, 0.5).unwrap();
        acc.extend(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let est = acc.finalize().unwrap();
        assert!((est.share - 0.3).abs() < 1e-15);
        assert!((est.variance(VarianceMethod::Proposed).unwrap() - 0.0030).abs() < 1e-15);
        assert!((est.variance(VarianceMethod::FixedQ).unwrap() - 0.047).abs() < 1e-15);
    }

    #[test]
    fn finalize_everything_below_threshold() {
        let mut acc = SufficientStats::new(10.0, 0.5).unwrap();
        acc.extend(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(acc.finalize().unwrap().share, 1.0);
    }

    #[test]
    fn finalize_requires_data() {
        let acc = SufficientStats::new(2.0, 0.5).unwrap();
        assert_eq!(acc.finalize().unwrap_err(), Error::InsufficientData);
        let mut one = SufficientStats::new(2.0, 0.5).unwrap();
        one.accumulate(1.0).unwrap();
        assert_eq!(one.finalize().unwrap_err(), Error::InsufficientData);
    }

    #[test]
    fn finalize_constant_stream_is_degenerate() {
        let mut acc = SufficientStats::new(5.0, 0.5).unwrap();
        acc.extend(&[5.0, 5.0, 5.0, 5.0]).unwrap();
        let est = acc.finalize().unwrap();
        assert!(est.degenerate);
        assert_eq!(est.variance(VarianceMethod::Proposed).unwrap(), 0.0);
    }

    #[test]
    fn finalize_matches_batch_on_random_stream() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let values: Vec<f64> = (0..10_000).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let sample = Sample::new(values.clone()).unwrap();
        let query = ShareQuery::estimated(0.75).unwrap();
        let batch = estimator::estimate_share(&sample, &query).unwrap();
        let v_prop = estimator::variance_proposed(&sample, &batch);
        let v_fix = estimator::variance_fixed_q(&sample, &batch);

        let mut acc = SufficientStats::new(batch.quantile, 0.75).unwrap();
        acc.extend(&values).unwrap();
        let streamed = acc.finalize().unwrap();

        assert!((streamed.share - batch.share).abs() <= 1e-12 * batch.share);
        let sv = streamed.variance(VarianceMethod::Proposed).unwrap();
        assert!((sv - v_prop).abs() <= 1e-12 * v_prop, "{sv} vs {v_prop}");
        let sf = streamed.variance(VarianceMethod::FixedQ).unwrap();
        assert!((sf - v_fix).abs() <= 1e-12 * v_fix, "{sf} vs {v_fix}");
    }

    #[test]
    fn sums_respect_ordering_invariants() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut acc = SufficientStats::new(1.0, 0.5).unwrap();
        for _ in 0..5000 {
            acc.accumulate(rng.gen_range(0.01..5.0)).unwrap();
        }
        assert!(acc.s_xa() >= 0.0 && acc.s_xa() <= acc.s_x());
        assert!(acc.s_xxa() >= 0.0 && acc.s_xxa() <= acc.s_xx());
        assert!(acc.s_a() <= acc.n());
    }

    #[test]
    fn from_raw_roundtrip() {
        let mut acc = SufficientStats::new(2.0, 0.5).unwrap();
        acc.extend(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let rebuilt = SufficientStats::from_raw(
            acc.n(),
            acc.s_x(),
            acc.s_xx(),
            acc.s_xa(),
            acc.s_xxa(),
            acc.s_a(),
            acc.q(),
            acc.p(),
        );
        let a = acc.finalize().unwrap();
        let b = rebuilt.finalize().unwrap();
        assert_eq!(a.share, b.share);
        assert_eq!(a.variances, b.variances);
    }
}
