//! Monte Carlo simulation harness: relative bias, coverage, and timing of
//! the competing variance estimators on synthetic data.
//!
//! Per replication the harness draws a fresh sample, computes the point
//! estimate and each requested variance, and records whether the Wald
//! interval covers the population share. The "true" sampling variance is
//! approximated by the variance of the point estimates across replications,
//! and each estimator's relative bias is measured against it.
//!
//! Reproducibility: replication `i` derives its RNG stream purely from
//! `(seed, i)`, so reports are bit-identical for any thread count.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use bottom_share::bootstrap::{self, ResamplePlan};
use bottom_share::dist::DistributionModel;
use bottom_share::estimator;
use bottom_share::normal;
use bottom_share::{Sample, ShareQuery, VarianceMethod};

use crate::error::CliError;

/// One simulation study: a model, a sample size, and the estimators to race.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub model: DistributionModel,
    pub n: usize,
    pub p: f64,
    pub replications: usize,
    pub bootstrap_b: usize,
    pub seed: u64,
    pub level: f64,
    pub methods: Vec<VarianceMethod>,
}

impl SimulationConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.replications < 100 {
            return Err(CliError::Config(format!(
                "need at least 100 replications for coverage estimates, got {}",
                self.replications
            )));
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("no variance methods requested".into()));
        }
        if self.methods.contains(&VarianceMethod::Bootstrap) && self.bootstrap_b < 2 {
            return Err(CliError::Config(format!(
                "bootstrap requested with b = {} (need b >= 2)",
                self.bootstrap_b
            )));
        }
        if (self.n as f64 * self.p).floor() < 1.0 {
            return Err(CliError::Config(format!(
                "floor(n*p) = 0 for n = {}, p = {}",
                self.n, self.p
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CliError::Config(format!("level {} must be in (0,1)", self.level)));
        }
        Ok(())
    }
}

/// Aggregated behavior of one variance method across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: VarianceMethod,
    /// Mean of the variance estimates across replications.
    pub mean_variance: f64,
    /// `(mean_variance − true_variance) / true_variance`.
    pub relative_bias: f64,
    /// Fraction of replications whose interval covered the true share.
    pub coverage: f64,
}

/// Output of [`run_simulation`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub case: String,
    pub n: usize,
    pub p: f64,
    pub replications: usize,
    pub bootstrap_b: usize,
    pub seed: u64,
    pub level: f64,
    /// Population share from the analytic model.
    pub true_share: f64,
    /// Monte Carlo sampling variance of the point estimates.
    pub true_variance: f64,
    pub methods: Vec<MethodSummary>,
}

/// Output of [`run_timing`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub case: String,
    pub n: usize,
    pub bootstrap_b: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Mean wall-clock milliseconds per (sample → variance) evaluation.
    pub mean_ms: Vec<(VarianceMethod, f64)>,
    /// Bootstraps per closed form, when both were timed.
    pub bootstrap_over_proposed: Option<f64>,
}

/// SplitMix64 finalizer over `(seed, index)`; gives every replication an
/// independent, order-free stream key.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Replication {
    share: f64,
    variances: Vec<f64>,
    covered: Vec<bool>,
}

fn run_replication(cfg: &SimulationConfig, rep: u64, true_share: f64, z: f64) -> Result<Replication, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(cfg.seed, 2 * rep));
    let values = cfg.model.sample_with(cfg.n, &mut rng);
    let sample = Sample::new(values)?;
    let query = ShareQuery::estimated(cfg.p)?;
    let est = estimator::estimate_share(&sample, &query)?;

    let mut variances = Vec::with_capacity(cfg.methods.len());
    let mut covered = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let v = match method {
            VarianceMethod::Proposed => estimator::variance_proposed(&sample, &est),
            VarianceMethod::FixedQ => estimator::variance_fixed_q(&sample, &est),
            VarianceMethod::BeachDavidson => estimator::variance_beach_davidson(&sample, &est)?,
            VarianceMethod::Bootstrap => {
                let plan = ResamplePlan::new(cfg.bootstrap_b, child_seed(cfg.seed, 2 * rep + 1))?;
                bootstrap::variance(&sample, &query, &plan)?
            }
        };
        let half = z * v.sqrt();
        covered.push((est.share - true_share).abs() <= half);
        variances.push(v);
    }
    Ok(Replication { share: est.share, variances, covered })
}

/// Runs the full study. Replications execute in parallel; aggregation walks
/// the collected results in replication order, so the report does not depend
/// on the thread count.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationReport, CliError> {
    cfg.validate()?;
    let true_share = cfg.model.bottom_share(cfg.p)?;
    let z = normal::inverse_cdf((1.0 + cfg.level) / 2.0);

    let reps: Vec<Replication> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(cfg, rep, true_share, z))
        .collect::<Result<_, _>>()?;

    let l = cfg.replications as f64;
    let mean_share = reps.iter().map(|r| r.share).sum::<f64>() / l;
    let true_variance =
        reps.iter().map(|r| (r.share - mean_share).powi(2)).sum::<f64>() / (l - 1.0);

    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(idx, &method)| {
            let mean_variance = reps.iter().map(|r| r.variances[idx]).sum::<f64>() / l;
            let coverage = reps.iter().filter(|r| r.covered[idx]).count() as f64 / l;
            MethodSummary {
                method,
                mean_variance,
                relative_bias: mean_variance / true_variance - 1.0,
                coverage,
            }
        })
        .collect();

    Ok(SimulationReport {
        case: cfg.model.to_string(),
        n: cfg.n,
        p: cfg.p,
        replications: cfg.replications,
        bootstrap_b: cfg.bootstrap_b,
        seed: cfg.seed,
        level: cfg.level,
        true_share,
        true_variance,
        methods,
    })
}

/// Times each requested method end to end (raw sample in, variance out) on
/// freshly drawn samples. Runs sequentially for timing fidelity.
pub fn run_timing(cfg: &SimulationConfig, repeats: usize) -> Result<TimingReport, CliError> {
    if repeats < 10 {
        return Err(CliError::Config(format!("need at least 10 timing repeats, got {repeats}")));
    }
    if (cfg.n as f64 * cfg.p).floor() < 1.0 {
        return Err(CliError::Config(format!("floor(n*p) = 0 for n = {}, p = {}", cfg.n, cfg.p)));
    }
    let query = ShareQuery::estimated(cfg.p)?;
    let mut totals = vec![0.0f64; cfg.methods.len()];

    for rep in 0..repeats as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(cfg.seed, 2 * rep));
        let sample = Sample::new(cfg.model.sample_with(cfg.n, &mut rng))?;
        for (idx, &method) in cfg.methods.iter().enumerate() {
            let start = Instant::now();
            let v = match method {
                VarianceMethod::Proposed => {
                    let est = estimator::estimate_share(&sample, &query)?;
                    estimator::variance_proposed(&sample, &est)
                }
                VarianceMethod::FixedQ => {
                    let est = estimator::estimate_share(&sample, &query)?;
                    estimator::variance_fixed_q(&sample, &est)
                }
                VarianceMethod::BeachDavidson => {
                    let est = estimator::estimate_share(&sample, &query)?;
                    estimator::variance_beach_davidson(&sample, &est)?
                }
                VarianceMethod::Bootstrap => {
                    let plan = ResamplePlan::new(cfg.bootstrap_b, child_seed(cfg.seed, 2 * rep + 1))?;
                    bootstrap::variance(&sample, &query, &plan)?
                }
            };
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(v);
            totals[idx] += elapsed;
        }
    }

    let mean_ms: Vec<(VarianceMethod, f64)> = cfg
        .methods
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| (m, t / repeats as f64))
        .collect();
    let find = |m: VarianceMethod| mean_ms.iter().find(|(mm, _)| *mm == m).map(|&(_, t)| t);
    let ratio = match (find(VarianceMethod::Proposed), find(VarianceMethod::Bootstrap)) {
        (Some(p), Some(b)) if p > 0.0 => Some(b / p),
        _ => None,
    };

    Ok(TimingReport {
        case: cfg.model.to_string(),
        n: cfg.n,
        bootstrap_b: cfg.bootstrap_b,
        repeats,
        seed: cfg.seed,
        mean_ms,
        bootstrap_over_proposed: ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> SimulationConfig {
        SimulationConfig {
            model: DistributionModel::exponential(1.0).unwrap(),
            n: 300,
            p: 0.75,
            replications: 150,
            bootstrap_b: 20,
            seed: 11,
            level: 0.95,
            methods: vec![
                VarianceMethod::Proposed,
                VarianceMethod::FixedQ,
                VarianceMethod::Bootstrap,
            ],
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = quick_config();
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn independent_of_thread_count() {
        let cfg = quick_config();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_simulation(&cfg)).unwrap();
        let b = four.install(|| run_simulation(&cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = quick_config();
        cfg.replications = 50;
        assert!(matches!(run_simulation(&cfg), Err(CliError::Config(_))));

        let mut cfg = quick_config();
        cfg.bootstrap_b = 1;
        assert!(matches!(run_simulation(&cfg), Err(CliError::Config(_))));

        let mut cfg = quick_config();
        cfg.n = 2;
        cfg.p = 0.3;
        assert!(matches!(run_simulation(&cfg), Err(CliError::Config(_))));
    }

    #[test]
    fn coverage_and_bias_are_sane_on_a_small_run() {
        // Coarse bands only; the acceptance suite runs the real study.
        let mut cfg = quick_config();
        cfg.replications = 400;
        cfg.n = 500;
        let report = run_simulation(&cfg).unwrap();
        assert!((report.true_share - 0.4034264097200273).abs() < 1e-12);
        for m in &report.methods {
            assert!(m.coverage > 0.85 && m.coverage <= 1.0, "{:?}", m);
        }
        let fixed = report
            .methods
            .iter()
            .find(|m| m.method == VarianceMethod::FixedQ)
            .unwrap();
        // The fixed-threshold estimator overshoots by several hundred percent.
        assert!(fixed.relative_bias > 1.0, "fixed_q bias = {}", fixed.relative_bias);
    }

    #[test]
    fn timing_reports_all_requested_methods() {
        let mut cfg = quick_config();
        cfg.n = 1000;
        let t = run_timing(&cfg, 10).unwrap();
        assert_eq!(t.mean_ms.len(), 3);
        assert!(t.bootstrap_over_proposed.unwrap() > 1.0);
        assert!(run_timing(&cfg, 5).is_err());
    }
}
