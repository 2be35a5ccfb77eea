//! CSV ingestion: one positive-valued column, optionally split into groups
//! by a second column.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::CliError;

/// Where and how to read the data.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub path: PathBuf,
    /// Column holding the metric. With `has_header = false` this must be a
    /// 0-based column index.
    pub value_column: String,
    /// Optional column whose values define groups; absent means one
    /// anonymous group labeled `"all"`.
    pub group_column: Option<String>,
    pub delimiter: u8,
    pub has_header: bool,
    /// Skip (and count) non-positive or unparseable values instead of
    /// rejecting the file.
    pub skip_invalid: bool,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, value_column: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            value_column: value_column.into(),
            group_column: None,
            delimiter: b',',
            has_header: true,
            skip_invalid: false,
        }
    }
}

/// Values for one group, plus counts of rows that were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedGroup {
    pub label: String,
    pub values: Vec<f64>,
    pub skipped_nonpositive: usize,
    pub skipped_unparseable: usize,
}

fn resolve_column(headers: Option<&csv::StringRecord>, name: &str) -> Result<usize, CliError> {
    match headers {
        Some(h) => h.iter().position(|c| c == name).ok_or_else(|| CliError::MissingColumn {
            name: name.to_string(),
            available: Some(h.iter().collect::<Vec<_>>().join(", ")),
        }),
        None => name.parse::<usize>().map_err(|_| CliError::MissingColumn {
            name: format!("{name} (expected a 0-based index with --no-header)"),
            available: None,
        }),
    }
}

/// Reads the file and returns one [`ParsedGroup`] per distinct group label,
/// sorted by label. Without a group column everything lands in a single
/// group labeled `"all"`.
pub fn parse_csv(spec: &DatasetSpec) -> Result<Vec<ParsedGroup>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(spec.has_header)
        .flexible(true)
        .from_path(&spec.path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                let source = match e.into_kind() {
                    csv::ErrorKind::Io(io) => io,
                    _ => unreachable!(),
                };
                CliError::Io { path: spec.path.clone(), source }
            }
            _ => CliError::Csv { path: spec.path.clone(), source: e },
        })?;

    let headers = if spec.has_header {
        Some(reader.headers().map_err(|e| CliError::Csv { path: spec.path.clone(), source: e })?.clone())
    } else {
        None
    };
    let value_idx = resolve_column(headers.as_ref(), &spec.value_column)?;
    let group_idx = match &spec.group_column {
        Some(name) => Some(resolve_column(headers.as_ref(), name)?),
        None => None,
    };

    let mut groups: BTreeMap<String, ParsedGroup> = BTreeMap::new();
    let mut total_rows = 0usize;
    let mut total_nonpositive = 0usize;
    let mut total_unparseable = 0usize;

    for record in reader.records() {
        let record = record.map_err(|e| CliError::Csv { path: spec.path.clone(), source: e })?;
        total_rows += 1;
        let label = match group_idx {
            Some(gi) => record.get(gi).unwrap_or("").to_string(),
            None => "all".to_string(),
        };
        let group = groups.entry(label.clone()).or_insert_with(|| ParsedGroup {
            label,
            values: Vec::new(),
            skipped_nonpositive: 0,
            skipped_unparseable: 0,
        });
        match record.get(value_idx).map(str::trim).map(str::parse::<f64>) {
            Some(Ok(v)) if v > 0.0 && v.is_finite() => group.values.push(v),
            Some(Ok(_)) => {
                group.skipped_nonpositive += 1;
                total_nonpositive += 1;
            }
            _ => {
                group.skipped_unparseable += 1;
                total_unparseable += 1;
            }
        }
    }

    if total_rows == 0 {
        return Err(CliError::EmptyGroup);
    }
    if !spec.skip_invalid && (total_nonpositive > 0 || total_unparseable > 0) {
        return Err(CliError::NonPositiveValues {
            column: spec.value_column.clone(),
            nonpositive: total_nonpositive,
            unparseable: total_unparseable,
        });
    }
    Ok(groups.into_values().collect())
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
    fn parses_values_exactly() {
        let f = write_temp("wage,region\n1.5,a\n2.25,b\n0.125,a\n");
        let mut spec = DatasetSpec::new(f.path(), "wage");
        spec.group_column = Some("region".into());
        let groups = parse_csv(&spec).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].label, "a");
        assert_eq!(groups[0].values, vec![1.5, 0.125]);
        assert_eq!(groups[1].values, vec![2.25]);
    }

    #[test]
    fn single_anonymous_group_without_group_column() {
        let f = write_temp("wage\n1\n2\n3\n");
        let spec = DatasetSpec::new(f.path(), "wage");
        let groups = parse_csv(&spec).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].label, "all");
        assert_eq!(groups[0].values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn header_only_file_is_empty() {
        let f = write_temp("wage,region\n");
        let spec = DatasetSpec::new(f.path(), "wage");
        assert!(matches!(parse_csv(&spec).unwrap_err(), CliError::EmptyGroup));
    }

    #[test]
    fn missing_column_is_reported() {
        let f = write_temp("wage\n1\n");
        let spec = DatasetSpec::new(f.path(), "salary");
        match parse_csv(&spec).unwrap_err() {
            CliError::MissingColumn { name, available } => {
                assert_eq!(name, "salary");
                assert_eq!(available.as_deref(), Some("wage"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let spec = DatasetSpec::new("/definitely/not/here.csv", "wage");
        assert!(matches!(parse_csv(&spec).unwrap_err(), CliError::Io { .. }));
    }

    #[test]
    fn strict_mode_rejects_nonpositive_and_unparseable() {
        let f = write_temp("wage\n1\n0\n-2\nabc\n3\n");
        let spec = DatasetSpec::new(f.path(), "wage");
        match parse_csv(&spec).unwrap_err() {
            CliError::NonPositiveValues { nonpositive, unparseable, .. } => {
                assert_eq!(nonpositive, 2);
                assert_eq!(unparseable, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn skip_mode_counts_and_continues() {
        let f = write_temp("wage\n1\n0\n-2\nabc\n3\n");
        let mut spec = DatasetSpec::new(f.path(), "wage");
        spec.skip_invalid = true;
        let groups = parse_csv(&spec).unwrap();
        assert_eq!(groups[0].values, vec![1.0, 3.0]);
        assert_eq!(groups[0].skipped_nonpositive, 2);
        assert_eq!(groups[0].skipped_unparseable, 1);
    }

    #[test]
    fn headerless_mode_uses_indices() {
        let f = write_temp("1;x\n2;y\n");
        let mut spec = DatasetSpec::new(f.path(), "0");
        spec.has_header = false;
        spec.delimiter = b';';
        spec.group_column = Some("1".into());
        let groups = parse_csv(&spec).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].values, vec![1.0]);
    }

    #[test]
    fn tab_delimiter() {
        let f = write_temp("wage\tg\n4.5\ta\n2.5\ta\n");
        let mut spec = DatasetSpec::new(f.path(), "wage");
        spec.delimiter = b'\t';
        spec.group_column = Some("g".into());
        let groups = parse_csv(&spec).unwrap();
        assert_eq!(groups[0].values, vec![4.5, 2.5]);
    }
}
