//! Machine-readable (JSON) and aligned-text output.
//!
//! Every JSON document carries `schema_version`. Tables are rendered from
//! the same structs that get serialized, formatted to 6 significant digits,
//! so the two views always agree; JSON keeps full double precision.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use bottom_share::stream::SufficientStats;
use bottom_share::VarianceMethod;

use crate::sim::{SimulationReport, TimingReport};

pub const SCHEMA_VERSION: u32 = 1;

/// `%g`-style formatting to `sig` significant digits.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.*e}", sig - 1)
    }
}

fn pct(x: f64) -> String {
    format!("{}%", fmt_sig(x * 100.0, 6))
}

// ---- estimate ----

#[derive(Debug, Clone, Serialize)]
pub struct IntervalJson {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupEstimateJson {
    pub group: String,
    pub n: usize,
    pub skipped_nonpositive: usize,
    pub skipped_unparseable: usize,
    pub quantile: f64,
    pub share: f64,
    pub degenerate: bool,
    pub variances: BTreeMap<&'static str, f64>,
    pub intervals: BTreeMap<&'static str, IntervalJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateJson {
    pub schema_version: u32,
    pub command: &'static str,
    pub p: f64,
    pub level: f64,
    pub groups: Vec<GroupEstimateJson>,
}

// ---- compare ----

#[derive(Debug, Clone, Serialize)]
pub struct CompareGroupJson {
    pub group: String,
    pub n: usize,
    pub share: f64,
    pub variance_proposed: f64,
    pub variance_fixed_q: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestJson {
    pub t_statistic: f64,
    pub p_value_one_sided: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareJson {
    pub schema_version: u32,
    pub command: &'static str,
    pub p: f64,
    pub level: f64,
    pub groups: Vec<CompareGroupJson>,
    pub tests: BTreeMap<&'static str, TestJson>,
}

// ---- simulate / bench ----

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummaryJson {
    pub method: &'static str,
    pub mean_variance: f64,
    pub relative_bias: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateJson {
    pub schema_version: u32,
    pub command: &'static str,
    pub case: String,
    pub n: usize,
    pub p: f64,
    pub replications: usize,
    pub bootstrap_b: usize,
    pub seed: u64,
    pub level: f64,
    pub true_share: f64,
    pub true_variance: f64,
    pub methods: Vec<MethodSummaryJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchJson {
    pub schema_version: u32,
    pub command: &'static str,
    pub case: String,
    pub n: usize,
    pub bootstrap_b: usize,
    pub repeats: usize,
    pub seed: u64,
    pub mean_ms: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_bootstrap_over_proposed: Option<f64>,
}

// ---- shard-merge ----

/// Wire format for one shard's sufficient statistics. Field names are part
/// of the interface; producers in other languages emit exactly these keys.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StatsRecord {
    pub n: u64,
    pub s_x: f64,
    pub s_xx: f64,
    pub s_xa: f64,
    pub s_xxa: f64,
    pub s_a: u64,
    pub q: f64,
    pub p: f64,
}

impl From<&SufficientStats> for StatsRecord {
    fn from(s: &SufficientStats) -> Self {
        Self {
            n: s.n(),
            s_x: s.s_x(),
            s_xx: s.s_xx(),
            s_xa: s.s_xa(),
            s_xxa: s.s_xxa(),
            s_a: s.s_a(),
            q: s.q(),
            p: s.p(),
        }
    }
}

impl From<&StatsRecord> for SufficientStats {
    fn from(r: &StatsRecord) -> Self {
        SufficientStats::from_raw(r.n, r.s_x, r.s_xx, r.s_xa, r.s_xxa, r.s_a, r.q, r.p)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MergedEstimateJson {
    pub n: usize,
    pub p: f64,
    pub quantile: f64,
    pub share: f64,
    pub degenerate: bool,
    pub variances: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShardMergeJson {
    pub schema_version: u32,
    pub command: &'static str,
    pub shards: usize,
    pub stats: StatsRecord,
    pub estimate: MergedEstimateJson,
}

// ---- table rendering ----

/// Pads columns to their widest cell; first column left-aligned, the rest
/// right-aligned.
fn render_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let emit = |out: &mut String, cells: &[String]| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i == 0 {
                out.push_str(&format!("{cell:<width$}", width = widths[i]));
            } else {
                out.push_str(&format!("{cell:>width$}", width = widths[i]));
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    emit(&mut out, headers);
    let sep: Vec<String> = (0..cols).map(|i| "-".repeat(widths[i])).collect();
    emit(&mut out, &sep);
    for row in rows {
        emit(&mut out, row);
    }
    out
}

pub fn estimate_table(doc: &EstimateJson) -> String {
    let methods: Vec<&'static str> = doc
        .groups
        .first()
        .map(|g| g.variances.keys().copied().collect())
        .unwrap_or_default();
    let mut headers = vec!["group".to_string(), "n".to_string(), "share".to_string(), "quantile".to_string()];
    for m in &methods {
        headers.push(format!("var[{m}]"));
        headers.push(format!("ci{}[{m}]", (doc.level * 100.0).round() as u32));
    }
    let rows: Vec<Vec<String>> = doc
        .groups
        .iter()
        .map(|g| {
            let mut row = vec![
                g.group.clone(),
                g.n.to_string(),
                fmt_sig(g.share, 6),
                fmt_sig(g.quantile, 6),
            ];
            for m in &methods {
                row.push(fmt_sig(g.variances[m], 6));
                match g.intervals.get(m) {
                    Some(ci) => row.push(format!("[{}, {}]", fmt_sig(ci.lower, 6), fmt_sig(ci.upper, 6))),
                    None => row.push("-".to_string()),
                }
            }
            row
        })
        .collect();
    render_table(&headers, &rows)
}

pub fn compare_table(doc: &CompareJson) -> String {
    let headers = ["group", "size", "share", "var[proposed]", "var[fixed_q]"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = doc
        .groups
        .iter()
        .map(|g| {
            vec![
                g.group.clone(),
                g.n.to_string(),
                fmt_sig(g.share, 6),
                fmt_sig(g.variance_proposed, 6),
                fmt_sig(g.variance_fixed_q, 6),
            ]
        })
        .collect();
    let mut out = render_table(&headers, &rows);
    for (name, test) in &doc.tests {
        out.push_str(&format!(
            "t[{}] = {}  (one-sided p = {})\n",
            name,
            fmt_sig(test.t_statistic, 6),
            fmt_sig(test.p_value_one_sided, 6)
        ));
    }
    out
}

pub fn simulate_table(doc: &SimulateJson) -> String {
    let mut headers = vec![
        "case".to_string(),
        "n".to_string(),
        "true_share".to_string(),
        "true_variance".to_string(),
    ];
    for m in &doc.methods {
        headers.push(format!("rb[{}]", m.method));
    }
    for m in &doc.methods {
        headers.push(format!("cov[{}]", m.method));
    }
    let mut row = vec![
        doc.case.clone(),
        doc.n.to_string(),
        fmt_sig(doc.true_share, 6),
        fmt_sig(doc.true_variance, 6),
    ];
    for m in &doc.methods {
        row.push(pct(m.relative_bias));
    }
    for m in &doc.methods {
        row.push(pct(m.coverage));
    }
    render_table(&headers, &[row])
}

pub fn bench_table(doc: &BenchJson) -> String {
    let mut out = format!("case: {}   n = {}   b = {}   repeats = {}\n", doc.case, doc.n, doc.bootstrap_b, doc.repeats);
    for (name, ms) in &doc.mean_ms {
        out.push_str(&format!("{name:>16}: {} ms\n", fmt_sig(*ms, 6)));
    }
    if let Some(r) = doc.ratio_bootstrap_over_proposed {
        out.push_str(&format!("bootstrap / proposed: {}x\n", fmt_sig(r, 6)));
    }
    out
}

pub fn shard_merge_table(doc: &ShardMergeJson) -> String {
    let mut out = format!(
        "merged {} shard(s): n = {}, q = {}, p = {}\n",
        doc.shards,
        doc.estimate.n,
        fmt_sig(doc.estimate.quantile, 6),
        fmt_sig(doc.estimate.p, 6)
    );
    out.push_str(&format!("share = {}\n", fmt_sig(doc.estimate.share, 6)));
    for (name, v) in &doc.estimate.variances {
        out.push_str(&format!("var[{name}] = {}\n", fmt_sig(*v, 6)));
    }
    out
}

/// Builds the simulate JSON document from a harness report.
pub fn simulate_json(r: &SimulationReport) -> SimulateJson {
    SimulateJson {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        case: r.case.clone(),
        n: r.n,
        p: r.p,
        replications: r.replications,
        bootstrap_b: r.bootstrap_b,
        seed: r.seed,
        level: r.level,
        true_share: r.true_share,
        true_variance: r.true_variance,
        methods: r
            .methods
            .iter()
            .map(|m| MethodSummaryJson {
                method: m.method.name(),
                mean_variance: m.mean_variance,
                relative_bias: m.relative_bias,
                coverage: m.coverage,
            })
            .collect(),
    }
}

/// Builds the bench JSON document from a timing report.
pub fn bench_json(t: &TimingReport) -> BenchJson {
    BenchJson {
        schema_version: SCHEMA_VERSION,
        command: "bench",
        case: t.case.clone(),
        n: t.n,
        bootstrap_b: t.bootstrap_b,
        repeats: t.repeats,
        seed: t.seed,
        mean_ms: t.mean_ms.iter().map(|&(m, ms)| (m.name(), ms)).collect(),
        ratio_bootstrap_over_proposed: t.bootstrap_over_proposed,
    }
}

/// Canonical method-name key for maps.
pub fn method_key(m: VarianceMethod) -> &'static str {
    m.name()
}
