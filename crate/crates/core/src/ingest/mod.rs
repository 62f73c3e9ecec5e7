//! Loaders and writers for impact tables, author events, scalar metrics and
//! precomputed profiles, plus the bibliographic client abstraction.
//!
//! CSV is canonical. JSON mirrors it as an array of one object per row with
//! the same field names.

mod client;
mod dataset;
mod profiles;
mod tables;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::model::ModelError;

pub use client::{fetch_author_records, BibliographicClient, ClientError, FixtureClient, RetryPolicy};
pub use dataset::{Dataset, ValidationIssue, ValidationMode};
pub use profiles::{
    family_suffix, read_profiles, write_profiles, FamilyValues, ProfileRecord, ProfileTable, DIMENSION_KEYS,
    SCALAR_KEYS,
};
pub use tables::{
    load_events, load_impact_table, load_scalars, write_events, write_impact_table, write_scalars, EventRecord,
    ScalarMetrics,
};

/// Token written for undefined numeric cells.
pub const NA: &str = "NA";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    /// Guesses from the file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(IngestError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Where a row came from: a 1-based CSV line (the header is line 1) or a
/// 1-based JSON array element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Line(u64),
    Record(u64),
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Line(n) => write!(f, "line {n}"),
            Position::Record(n) => write!(f, "record {n}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{at}: malformed row: {message}")]
    Malformed { at: Position, message: String },
    #[error("malformed input: {0}")]
    Syntax(String),
    #[error("{at}: {source}")]
    Invalid {
        at: Position,
        #[source]
        source: ModelError,
    },
    #[error("{at}: negative value {value} in column `{column}`")]
    Negative {
        at: Position,
        column: &'static str,
        value: i64,
    },
    #[error("duplicate impact key ({journal}, {year}, {indicator}) at {first} and {second}")]
    DuplicateImpact {
        journal: String,
        year: i32,
        indicator: String,
        first: Position,
        second: Position,
    },
    #[error("duplicate author `{author_id}` at {first} and {second}")]
    DuplicateAuthor {
        author_id: String,
        first: Position,
        second: Position,
    },
    #[error("author `{author_id}` has conflicting groups `{first}` and `{second}` ({at})")]
    ConflictingGroup {
        author_id: String,
        first: String,
        second: String,
        at: Position,
    },
    #[error("{at}: author `{author_id}`: h = {h} exceeds {column} = {limit}")]
    HIndexBound {
        at: Position,
        author_id: String,
        h: u64,
        column: &'static str,
        limit: u64,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unknown format `{0}` (expected csv or json)")]
    UnknownFormat(String),
    #[error("author `{0}` not found")]
    UnknownAuthor(String),
    #[error("author `{author_id}`: transport failure after {attempts} attempt(s): {message}")]
    Transport {
        author_id: String,
        attempts: u32,
        message: String,
    },
    #[error("dataset validation failed: {0}")]
    Validation(String),
}

/// Deserializes every row, keeping its position.
pub(crate) fn read_rows<T: DeserializeOwned>(
    reader: impl Read,
    format: Format,
) -> Result<Vec<(Position, T)>, IngestError> {
    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
            let headers = rdr.headers().map_err(csv_error)?.clone();
            let mut out = Vec::new();
            for record in rdr.records() {
                let record = record.map_err(csv_error)?;
                let at = Position::Line(record.position().map_or(0, |p| p.line()));
                let row = record.deserialize(Some(&headers)).map_err(|e| IngestError::Malformed {
                    at,
                    message: csv_message(&e),
                })?;
                out.push((at, row));
            }
            Ok(out)
        }
        Format::Json => {
            let values: Vec<serde_json::Value> =
                serde_json::from_reader(reader).map_err(|e| IngestError::Syntax(e.to_string()))?;
            values
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    let at = Position::Record(i as u64 + 1);
                    serde_json::from_value(v)
                        .map(|row| (at, row))
                        .map_err(|e| IngestError::Malformed {
                            at,
                            message: e.to_string(),
                        })
                })
                .collect()
        }
    }
}

fn csv_message(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    }
}

fn csv_error(e: csv::Error) -> IngestError {
    let message = csv_message(&e);
    match e.position() {
        Some(p) => IngestError::Malformed {
            at: Position::Line(p.line()),
            message,
        },
        None => IngestError::Syntax(message),
    }
}

/// Writes rows under a fixed header. The header is emitted even when there
/// are no rows so empty files reload.
pub(crate) fn write_rows<T: Serialize>(
    mut writer: impl Write,
    header: &[&str],
    rows: &[T],
    format: Format,
) -> Result<(), IngestError> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
            w.write_record(header).map_err(|e| IngestError::Syntax(e.to_string()))?;
            for row in rows {
                w.serialize(row).map_err(|e| IngestError::Syntax(e.to_string()))?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut writer, rows).map_err(|e| IngestError::Syntax(e.to_string()))?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_parsing_and_guessing() {
        assert_eq!("JSON".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
        assert_eq!(Format::from_path(Path::new("a/b.json")), Format::Json);
        assert_eq!(Format::from_path(Path::new("a/b.csv")), Format::Csv);
        assert_eq!(Format::from_path(Path::new("noext")), Format::Csv);
    }

    #[test]
    fn positions_render() {
        assert_eq!(Position::Line(3).to_string(), "line 3");
        assert_eq!(Position::Record(1).to_string(), "record 1");
    }
}
