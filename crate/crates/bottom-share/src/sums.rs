//! Compensated floating-point accumulation.

#[allow(unused_imports)]
use num_traits::Float;

/// Running sum with a Neumaier compensation term.
///
/// The `(sum, comp)` pair carries the accumulated value to roughly double
/// working precision. This keeps 1e-12 relative agreement reachable on
/// million-point streams and makes shard merges insensitive to association
/// order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    pub(crate) const fn from_value(sum: f64) -> Self {
        Self { sum, comp: 0.0 }
    }

    /// Adds `x` using Neumaier's branch of the two-sum transformation.
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another compensated sum into this one, keeping both error terms.
    pub(crate) fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum over an iterator.
pub(crate) fn total(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
