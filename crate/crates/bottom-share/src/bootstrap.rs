//! Seeded nonparametric bootstrap for the bottom-`p` share.
//!
//! Each resample draws `n` observations with replacement and reruns the
//! whole estimation pipeline — in particular the quantile is re-estimated
//! inside every resample, which is exactly the source of variability the
//! fixed-threshold shortcut ignores. Raw observations are resampled, never
//! precomputed influence terms.
//!
//! Reproducibility: resample `j` draws from its own ChaCha stream keyed by
//! `(seed, j)`, so results are independent of evaluation order and safe to
//! parallelize across resamples.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sums::CompensatedSum;
use crate::types::{QuantileMode, Sample, ShareQuery};

/// Resampling plan: number of resamples and the RNG seed.
///
/// The statistic is always the bottom-`p` share of the query handed to
/// [`distribution`] or [`variance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResamplePlan {
    b: usize,
    seed: u64,
}

impl ResamplePlan {
    pub fn new(b: usize, seed: u64) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidResampleCount { b });
        }
        Ok(Self { b, seed })
    }

    pub fn resamples(&self) -> usize {
        self.b
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// RNG for resample `j`: one ChaCha stream per resample index.
fn resample_rng(seed: u64, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64 + 1);
    rng
}

/// The `b` resampled share statistics, in resample order.
pub fn distribution(sample: &Sample, query: &ShareQuery, plan: &ResamplePlan) -> Result<Vec<f64>> {
    let n = sample.len();
    let p = query.p();
    // A resample has the same size as the sample, so the quantile index is
    // degenerate for the resamples exactly when it is for the original.
    let k = (n as f64 * p).floor() as usize;
    if matches!(query.mode(), QuantileMode::EstimateFromSample) && k == 0 {
        return Err(Error::QuantileIndexZero { n, p });
    }

    let values = sample.values();
    let mut buf = vec![0.0f64; n];
    let mut stats = Vec::with_capacity(plan.b);
    for j in 0..plan.b {
        let mut rng = resample_rng(plan.seed, j);
        for slot in buf.iter_mut() {
            *slot = values[rng.gen_range(0..n)];
        }
        let q = match query.mode() {
            QuantileMode::EstimateFromSample => {
                let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
                *kth
            }
            QuantileMode::FixedKnown(q) => q,
        };
        let mut below = CompensatedSum::new();
        let mut total = CompensatedSum::new();
        for &x in buf.iter() {
            total.add(x);
            if x <= q {
                below.add(x);
            }
        }
        stats.push((below.value() / total.value()).clamp(0.0, 1.0));
    }
    Ok(stats)
}

/// Bootstrap variance: the (b−1)-denominator variance of the resampled
/// statistics. Deterministic given the plan's seed.
pub fn variance(sample: &Sample, query: &ShareQuery, plan: &ResamplePlan) -> Result<f64> {
    let stats = distribution(sample, query, plan)?;
    let b = stats.len() as f64;
    let mean = crate::sums::total(stats.iter().copied()) / b;
    let mut ss = CompensatedSum::new();
    for &s in &stats {
        ss.add((s - mean) * (s - mean));
    }
    Ok(ss.value() / (b - 1.0))
}
