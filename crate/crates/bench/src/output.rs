use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::runner::RunRecord;
use crate::summary::GroupSummary;

pub const SCHEMA_VERSION: u32 = 1;

/// Column order of the records CSV.
pub const RECORD_COLUMNS: [&str; 8] = [
    "segment", "channel", "cr", "algorithm", "prd", "iterations", "solve_count", "wall_time",
];

/// Column order of the summaries CSV.
pub const SUMMARY_COLUMNS: [&str; 7] = ["group", "low", "p25", "median", "p75", "high", "n_outliers"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// `.json` means JSON, anything else CSV.
    pub fn for_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(BenchError::Config(format!("unknown format '{other}' (csv, json)"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SummaryRow {
    group: String,
    low: f64,
    p25: f64,
    median: f64,
    p75: f64,
    high: f64,
    n_outliers: usize,
}

impl From<&GroupSummary> for SummaryRow {
    fn from(g: &GroupSummary) -> Self {
        let s = &g.summary;
        SummaryRow {
            group: g.group.replace(',', ";"),
            low: s.low,
            p25: s.p25,
            median: s.median,
            p75: s.p75,
            high: s.high,
            n_outliers: s.outliers.len(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RecordsDoc {
    schema_version: u32,
    records: Vec<RunRecord>,
}

#[derive(Serialize)]
struct SummariesDoc {
    schema_version: u32,
    summaries: Vec<SummaryRow>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

fn write_csv<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let csv_err = |source| BenchError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn write_json<S: Serialize>(path: &Path, doc: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|source| BenchError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_summaries(summaries: &[GroupSummary], path: &Path, format: Format) -> Result<()> {
    let rows = summaries.iter().map(SummaryRow::from);
    match format {
        Format::Csv => write_csv(path, rows),
        Format::Json => write_json(path, &SummariesDoc { schema_version: SCHEMA_VERSION, summaries: rows.collect() }),
    }
}

/// Writes `records.<ext>` and `summary.<ext>` into `dir`, creating it if
/// needed, and returns both paths.
pub fn emit(records: &[RunRecord], summaries: &[GroupSummary], dir: &Path, format: Format) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let records_path = dir.join(format!("records.{}", format.extension()));
    let summary_path = dir.join(format!("summary.{}", format.extension()));
    match format {
        Format::Csv => write_csv(&records_path, records)?,
        Format::Json => write_json(
            &records_path,
            &RecordsDoc { schema_version: SCHEMA_VERSION, records: records.to_vec() },
        )?,
    }
    write_summaries(summaries, &summary_path, format)?;
    Ok((records_path, summary_path))
}

/// Reads a records file written by [`emit`]; the format follows the
/// extension.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    match Format::for_path(path) {
        Format::Csv => {
            let csv_err = |source| BenchError::Csv { path: path.to_path_buf(), source };
            let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
            r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
        }
        Format::Json => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let doc: RecordsDoc =
                serde_json::from_str(&text).map_err(|source| BenchError::Json { path: path.to_path_buf(), source })?;
            if doc.schema_version != SCHEMA_VERSION {
                return Err(BenchError::Config(format!(
                    "{}: schema_version {} not supported (expected {SCHEMA_VERSION})",
                    path.display(),
                    doc.schema_version
                )));
            }
            Ok(doc.records)
        }
    }
}
