//! The work behind each CLI subcommand, kept binary-free so tests can call
//! straight in.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use bottom_share::estimator::{self, EstimateOptions};
use bottom_share::stream::SufficientStats;
use bottom_share::{Sample, ShareQuery, VarianceMethod};

use crate::csvio::{parse_csv, DatasetSpec};
use crate::error::CliError;
use crate::report::{
    CompareGroupJson, CompareJson, EstimateJson, GroupEstimateJson, IntervalJson,
    MergedEstimateJson, ShardMergeJson, StatsRecord, TestJson, SCHEMA_VERSION,
};

/// Parameters for the `estimate` subcommand.
#[derive(Debug, Clone)]
pub struct EstimateParams {
    pub spec: DatasetSpec,
    pub p: f64,
    /// Treat this threshold as known instead of estimating the quantile.
    /// Required for shard workflows, where every shard must accumulate
    /// against one shared threshold.
    pub fixed_q: Option<f64>,
    pub level: f64,
    pub methods: Vec<VarianceMethod>,
    pub bootstrap_b: usize,
    pub seed: u64,
    /// Optional path for one sufficient-statistics JSON record per group
    /// (JSON lines), ready for `shard-merge`.
    pub emit_stats: Option<PathBuf>,
}

pub fn run_estimate(params: &EstimateParams) -> Result<EstimateJson, CliError> {
    let groups = parse_csv(&params.spec)?;
    let query = match params.fixed_q {
        Some(q) => ShareQuery::fixed(params.p, q)?,
        None => ShareQuery::estimated(params.p)?,
    };
    let opts = EstimateOptions {
        methods: params.methods.clone(),
        bootstrap_b: params.bootstrap_b,
        seed: params.seed,
    };

    let mut out_groups = Vec::with_capacity(groups.len());
    let mut stats_lines = Vec::new();
    for g in &groups {
        let sample = Sample::new(g.values.clone())?;
        let est = estimator::estimate(&sample, &query, &opts)?;

        let mut variances = BTreeMap::new();
        let mut intervals = BTreeMap::new();
        for &m in &params.methods {
            variances.insert(m.name(), est.variance(m)?);
            let ci = estimator::confidence_interval(&est, m, params.level)?;
            intervals.insert(m.name(), IntervalJson { lower: ci.lower, upper: ci.upper, level: ci.level });
        }

        if params.emit_stats.is_some() {
            let mut acc = SufficientStats::new(est.quantile, params.p)?;
            acc.extend(sample.values())?;
            stats_lines.push(serde_json::to_string(&StatsRecord::from(&acc)).expect("serialize"));
        }

        out_groups.push(GroupEstimateJson {
            group: g.label.clone(),
            n: sample.len(),
            skipped_nonpositive: g.skipped_nonpositive,
            skipped_unparseable: g.skipped_unparseable,
            quantile: est.quantile,
            share: est.share,
            degenerate: est.degenerate,
            variances,
            intervals,
        });
    }

    if let Some(path) = &params.emit_stats {
        let body = stats_lines.join("\n") + "\n";
        std::fs::write(path, body).map_err(|source| CliError::Io { path: path.clone(), source })?;
    }

    Ok(EstimateJson {
        schema_version: SCHEMA_VERSION,
        command: "estimate",
        p: params.p,
        level: params.level,
        groups: out_groups,
    })
}

/// Parameters for the `compare` subcommand.
#[derive(Debug, Clone)]
pub struct CompareParams {
    pub spec: DatasetSpec,
    pub p: f64,
    pub level: f64,
}

pub fn run_compare(params: &CompareParams) -> Result<CompareJson, CliError> {
    if params.spec.group_column.is_none() {
        return Err(CliError::Config("compare requires --group-column".into()));
    }
    let groups = parse_csv(&params.spec)?;
    if groups.len() != 2 {
        return Err(CliError::GroupCountNotTwo { found: groups.len() });
    }
    let query = ShareQuery::estimated(params.p)?;
    let opts = EstimateOptions {
        methods: vec![VarianceMethod::Proposed, VarianceMethod::FixedQ],
        ..EstimateOptions::default()
    };

    let mut ests = Vec::with_capacity(2);
    let mut rows = Vec::with_capacity(2);
    for g in &groups {
        let sample = Sample::new(g.values.clone())?;
        let est = estimator::estimate(&sample, &query, &opts)?;
        rows.push(CompareGroupJson {
            group: g.label.clone(),
            n: sample.len(),
            share: est.share,
            variance_proposed: est.variance(VarianceMethod::Proposed)?,
            variance_fixed_q: est.variance(VarianceMethod::FixedQ)?,
        });
        ests.push(est);
    }

    let mut tests = BTreeMap::new();
    for m in [VarianceMethod::Proposed, VarianceMethod::FixedQ] {
        let t = estimator::two_sample_test(&ests[0], &ests[1], m)?;
        tests.insert(m.name(), TestJson {
            t_statistic: t.t_statistic,
            p_value_one_sided: t.p_value_one_sided,
        });
    }

    Ok(CompareJson {
        schema_version: SCHEMA_VERSION,
        command: "compare",
        p: params.p,
        level: params.level,
        groups: rows,
        tests,
    })
}

/// Reads shard records (JSON lines, one object per line) from each path,
/// merges them all, and finalizes.
pub fn run_shard_merge(paths: &[PathBuf]) -> Result<ShardMergeJson, CliError> {
    let mut merged: Option<SufficientStats> = None;
    let mut shards = 0usize;
    for path in paths {
        let file = std::fs::File::open(path)
            .map_err(|source| CliError::Io { path: path.clone(), source })?;
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CliError::Io { path: path.clone(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: StatsRecord =
                serde_json::from_str(&line).map_err(|e| CliError::BadShardRecord {
                    path: path.clone(),
                    detail: format!("line {}: {e}", lineno + 1),
                })?;
            let stats = SufficientStats::from(&record);
            shards += 1;
            merged = Some(match merged.take() {
                None => stats,
                Some(acc) => acc.merge(&stats)?,
            });
        }
    }
    let merged = merged.ok_or(CliError::EmptyGroup)?;
    let est = merged.finalize()?;

    let mut variances = BTreeMap::new();
    for (m, v) in &est.variances {
        variances.insert(m.name(), *v);
    }
    Ok(ShardMergeJson {
        schema_version: SCHEMA_VERSION,
        command: "shard-merge",
        shards,
        stats: StatsRecord::from(&merged),
        estimate: MergedEstimateJson {
            n: est.n,
            p: est.p,
            quantile: est.quantile,
            share: est.share,
            degenerate: est.degenerate,
            variances,
        },
    })
}

/// Looks for the CPS1988 dataset next to the workspace (`data/CPS1988.csv`)
/// or at `$BOTTOM_SHARE_CPS1988`; used by the optional empirical checks.
pub fn cps1988_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("BOTTOM_SHARE_CPS1988") {
        let p = PathBuf::from(p);
        if p.exists() {
            return Some(p);
        }
    }
    let candidate = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/CPS1988.csv");
    candidate.exists().then_some(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn estimate_hand_csv() {
        let f = write_temp("x\n1\n2\n3\n4\n");
        let params = EstimateParams {
            spec: DatasetSpec::new(f.path(), "x"),
            p: 0.5,
            fixed_q: None,
            level: 0.95,
            methods: vec![VarianceMethod::Proposed, VarianceMethod::FixedQ],
            bootstrap_b: 200,
            seed: 0,
            emit_stats: None,
        };
        let doc = run_estimate(&params).unwrap();
        assert_eq!(doc.groups.len(), 1);
        let g = &doc.groups[0];
        assert_eq!(g.n, 4);
        assert!((g.share - 0.3).abs() < 1e-15);
        assert!((g.variances["proposed"] - 0.0030).abs() < 1e-15);
        assert!((g.variances["fixed_q"] - 0.047).abs() < 1e-15);
    }

    #[test]
    fn compare_identical_groups_gives_zero_t() {
        let f = write_temp("x,g\n1,a\n2,a\n3,a\n4,a\n1,b\n2,b\n3,b\n4,b\n");
        let mut spec = DatasetSpec::new(f.path(), "x");
        spec.group_column = Some("g".into());
        let doc = run_compare(&CompareParams { spec, p: 0.5, level: 0.95 }).unwrap();
        assert_eq!(doc.groups.len(), 2);
        assert_eq!(doc.tests["proposed"].t_statistic, 0.0);
        assert_eq!(doc.tests["fixed_q"].t_statistic, 0.0);
        assert!((doc.tests["proposed"].p_value_one_sided - 0.5).abs() < 1e-15);
    }

    #[test]
    fn compare_requires_two_groups() {
        let f = write_temp("x,g\n1,a\n2,a\n3,c\n4,b\n");
        let mut spec = DatasetSpec::new(f.path(), "x");
        spec.group_column = Some("g".into());
        let err = run_compare(&CompareParams { spec, p: 0.5, level: 0.95 }).unwrap_err();
        assert!(matches!(err, CliError::GroupCountNotTwo { found: 3 }));
    }

    #[test]
    fn shard_merge_roundtrip() {
        let f = write_temp("x\n1\n2\n3\n4\n");
        let dir = tempfile::tempdir().unwrap();
        let stats_path = dir.path().join("stats.jsonl");
        let params = EstimateParams {
            spec: DatasetSpec::new(f.path(), "x"),
            p: 0.5,
            fixed_q: None,
            level: 0.95,
            methods: vec![VarianceMethod::Proposed],
            bootstrap_b: 200,
            seed: 0,
            emit_stats: Some(stats_path.clone()),
        };
        let direct = run_estimate(&params).unwrap();
        let merged = run_shard_merge(std::slice::from_ref(&stats_path)).unwrap();
        assert_eq!(merged.shards, 1);
        assert_eq!(merged.estimate.share, direct.groups[0].share);
        // The moment expansion agrees with the direct residual pass to the
        // streaming contract's tolerance, not bitwise.
        let (a, b) = (merged.estimate.variances["proposed"], direct.groups[0].variances["proposed"]);
        assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
    }

    #[test]
    fn shard_merge_rejects_garbage() {
        let f = write_temp("{\"not\": \"a record\"}\n");
        let err = run_shard_merge(&[f.path().to_path_buf()]).unwrap_err();
        assert!(matches!(err, CliError::BadShardRecord { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn shard_merge_rejects_mismatched_thresholds() {
        let a = StatsRecord { n: 3, s_x: 6.0, s_xx: 14.0, s_xa: 3.0, s_xxa: 5.0, s_a: 2, q: 2.0, p: 0.5 };
        let mut b = a;
        b.q = 3.0;
        let f = write_temp(&format!(
            "{}\n{}\n",
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        ));
        let err = run_shard_merge(&[f.path().to_path_buf()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
