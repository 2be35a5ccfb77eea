use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the CLI layer.
///
/// Exit-code policy: problems with user-supplied input (files, columns,
/// malformed records, inconsistent shards) exit with 2; numeric and
/// estimation failures on valid input exit with 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("column '{name}' not found{}", available.as_deref().map(|a| format!(" (available: {a})")).unwrap_or_default())]
    MissingColumn { name: String, available: Option<String> },
    #[error("no data rows after the header")]
    EmptyGroup,
    #[error("{nonpositive} non-positive and {unparseable} unparseable value(s) in column '{column}'; pass --skip-nonpositive to drop them")]
    NonPositiveValues { column: String, nonpositive: usize, unparseable: usize },
    #[error("expected exactly two groups, found {found}")]
    GroupCountNotTwo { found: usize },
    #[error("invalid JSON shard record in {path}: {detail}")]
    BadShardRecord { path: PathBuf, detail: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Estimation(#[from] bottom_share::Error),
}

impl CliError {
    /// 2 for input problems, 3 for numeric/estimation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. }
            | CliError::Csv { .. }
            | CliError::MissingColumn { .. }
            | CliError::EmptyGroup
            | CliError::NonPositiveValues { .. }
            | CliError::GroupCountNotTwo { .. }
            | CliError::BadShardRecord { .. }
            | CliError::Config(_) => 2,
            // Shards that disagree on (q, p) are inconsistent inputs.
            CliError::Estimation(bottom_share::Error::ThresholdMismatch) => 2,
            CliError::Estimation(_) => 3,
        }
    }
}
