use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bottom_share::dist::DistributionModel;
use bottom_share::VarianceMethod;
use bottom_share_cli::commands::{self, CompareParams, EstimateParams};
use bottom_share_cli::csvio::DatasetSpec;
use bottom_share_cli::report;
use bottom_share_cli::sim::{self, SimulationConfig};
use bottom_share_cli::CliError;

/// Estimation and inference for bottom-p shares of a positive metric.
///
/// The bottom-p share is the fraction of the total (wages, streaming hours,
/// spend, ...) carried by the lowest p fraction of the population. The
/// `estimate` and `compare` subcommands work on CSV columns; `simulate` and
/// `bench` race the variance estimators on synthetic data; `shard-merge`
/// combines sufficient statistics produced on separate shards.
#[derive(Parser)]
#[command(name = "bottom-share", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the bottom-p share of a CSV column, with confidence intervals.
    Estimate(EstimateArgs),
    /// Compare the bottom-p share across exactly two groups.
    Compare(CompareArgs),
    /// Monte Carlo study of coverage and relative bias on a synthetic model.
    Simulate(SimulateArgs),
    /// Time the variance estimators on synthetic data.
    Bench(BenchArgs),
    /// Merge sufficient-statistics shards (JSON lines) and finalize.
    #[command(name = "shard-merge")]
    ShardMerge(ShardMergeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Json,
}

#[derive(Args)]
struct InputArgs {
    /// CSV file to read.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Column holding the positive metric (name, or 0-based index with --no-header).
    #[arg(long, value_name = "NAME")]
    value_column: String,
    /// Optional column defining groups.
    #[arg(long, value_name = "NAME")]
    group_column: Option<String>,
    /// Field delimiter.
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    /// Treat the first row as data rather than a header.
    #[arg(long)]
    no_header: bool,
    /// Skip (and count) non-positive or unparseable values instead of failing.
    #[arg(long)]
    skip_nonpositive: bool,
}

impl InputArgs {
    fn to_spec(&self) -> DatasetSpec {
        DatasetSpec {
            path: self.input.clone(),
            value_column: self.value_column.clone(),
            group_column: self.group_column.clone(),
            delimiter: self.delimiter,
            has_header: !self.no_header,
            skip_invalid: self.skip_nonpositive,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Target probability: the share of the bottom p fraction.
    #[arg(long, default_value_t = 0.75)]
    p: f64,
    /// Treat this threshold as known instead of estimating the quantile
    /// from each group (needed when accumulating shards of one dataset).
    #[arg(long, value_name = "Q")]
    fixed_q: Option<f64>,
    /// Variance methods (comma separated): proposed, fixed_q, beach_davidson, bootstrap.
    #[arg(long, value_delimiter = ',', default_value = "proposed,fixed_q", value_parser = parse_method)]
    methods: Vec<VarianceMethod>,
    /// Confidence level for the intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Bootstrap resamples (only used when methods include bootstrap).
    #[arg(long, default_value_t = 200)]
    boot: usize,
    /// RNG seed for bootstrap resampling.
    #[arg(long, env = "BOTTOM_SHARE_SEED", default_value_t = 0)]
    seed: u64,
    /// Write one sufficient-statistics JSON record per group (JSON lines).
    #[arg(long, value_name = "PATH")]
    emit_stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.75)]
    p: f64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
}

#[derive(Args)]
struct ModelArgs {
    /// Model family to draw from.
    #[arg(long, value_enum)]
    dist: DistKind,
    /// Log-scale mean (lognormal).
    #[arg(long, default_value_t = 0.4, allow_negative_numbers = true)]
    mu: f64,
    /// Log-scale standard deviation (lognormal).
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Rate (exponential).
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Upper endpoint (uniform on (0, upper)).
    #[arg(long, default_value_t = 1.0)]
    upper: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistKind {
    #[value(alias = "log-normal", alias = "ln")]
    Lognormal,
    #[value(alias = "exponential")]
    Exp,
    #[value(alias = "unif")]
    Uniform,
}

impl ModelArgs {
    fn to_model(&self) -> Result<DistributionModel, CliError> {
        let model = match self.dist {
            DistKind::Lognormal => DistributionModel::log_normal(self.mu, self.sigma),
            DistKind::Exp => DistributionModel::exponential(self.lambda),
            DistKind::Uniform => DistributionModel::uniform(self.upper),
        };
        model.map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sample size per replication.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0.75)]
    p: f64,
    /// Monte Carlo replications (desk scale: 2000; paper scale: 5000).
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    /// Bootstrap resamples per replication.
    #[arg(long, default_value_t = 200)]
    boot: usize,
    #[arg(long, env = "BOTTOM_SHARE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, value_delimiter = ',', default_value = "proposed,fixed_q,bootstrap", value_parser = parse_method)]
    methods: Vec<VarianceMethod>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10000)]
    n: usize,
    #[arg(long, default_value_t = 0.75)]
    p: f64,
    #[arg(long, default_value_t = 200)]
    boot: usize,
    /// Timing repetitions (each on a fresh sample).
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, env = "BOTTOM_SHARE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "proposed,bootstrap", value_parser = parse_method)]
    methods: Vec<VarianceMethod>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
}

#[derive(Args)]
struct ShardMergeArgs {
    /// Shard files, each holding one JSON record per line.
    #[arg(value_name = "FILE", required = true)]
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

fn parse_method(s: &str) -> Result<VarianceMethod, String> {
    VarianceMethod::from_str(s).map_err(|_| {
        format!("unknown method '{s}' (expected proposed, fixed_q, beach_davidson, or bootstrap)")
    })
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("delimiter must be a single ASCII character, got '{s}'")),
    }
}

fn emit<T: serde::Serialize>(doc: &T, table: String, format: OutputFormat) {
    match format {
        OutputFormat::Json => {
            println!("{}", serde_json::to_string(doc).expect("serializable report"))
        }
        OutputFormat::Table => print!("{table}"),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(args) => {
            let params = EstimateParams {
                spec: args.input.to_spec(),
                p: args.p,
                fixed_q: args.fixed_q,
                level: args.level,
                methods: args.methods.clone(),
                bootstrap_b: args.boot,
                seed: args.seed,
                emit_stats: args.emit_stats.clone(),
            };
            let doc = commands::run_estimate(&params)?;
            emit(&doc, report::estimate_table(&doc), args.format);
        }
        Command::Compare(args) => {
            let params =
                CompareParams { spec: args.input.to_spec(), p: args.p, level: args.level };
            let doc = commands::run_compare(&params)?;
            emit(&doc, report::compare_table(&doc), args.format);
        }
        Command::Simulate(args) => {
            let cfg = SimulationConfig {
                model: args.model.to_model()?,
                n: args.n,
                p: args.p,
                replications: args.reps,
                bootstrap_b: args.boot,
                seed: args.seed,
                level: args.level,
                methods: args.methods.clone(),
            };
            let doc = report::simulate_json(&sim::run_simulation(&cfg)?);
            emit(&doc, report::simulate_table(&doc), args.format);
        }
        Command::Bench(args) => {
            let cfg = SimulationConfig {
                model: args.model.to_model()?,
                n: args.n,
                p: args.p,
                replications: 100,
                bootstrap_b: args.boot,
                seed: args.seed,
                level: 0.95,
                methods: args.methods.clone(),
            };
            let doc = report::bench_json(&sim::run_timing(&cfg, args.repeats)?);
            emit(&doc, report::bench_table(&doc), args.format);
        }
        Command::ShardMerge(args) => {
            let doc = commands::run_shard_merge(&args.files)?;
            emit(&doc, report::shard_merge_table(&doc), args.format);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
