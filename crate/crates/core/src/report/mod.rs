//! Assembles profiles and statistics into tables and figure data.
//!
//! Reports work on [`ProfileRecord`] rows and address variables by their
//! profiles column key (`papers`, `h`, `pi_sjr`, ...).

mod correlations;
mod figures;
mod render;
mod tables;

use crate::ingest::ProfileRecord;
use crate::stats::StatsError;

pub use correlations::{
    correlation_report, correlation_table, correlation_variables, cross_family_correlation, cross_family_table,
    CrossFamilyCorrelation, GroupCorrelation,
};
pub use figures::{boxplot_svg, figure_data, BoxplotRow, FigureData, FigureKind, OrderedRow, ScatterPoint};
pub use render::{format_number, round_half_even, Cell, ReportTable, CORRELATION_DECIMALS, VALUE_DECIMALS};
pub use tables::{
    aggregate_report, author_table, author_table_report, group_summary, group_summary_table, sort_author_rows,
    AggregateReport, AggregateVariable, AuthorTableRow, CrossFamilyDelta, GroupSummaryBlock, VariableSummary,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("unknown variable `{name}`; available: {}", available.join(", "))]
    UnknownVariable { name: String, available: Vec<String> },
    #[error("author `{0}` has no group")]
    MissingGroup(String),
    #[error("author `{author_id}` has no {family} profile")]
    MissingProfile { author_id: String, family: String },
    #[error("author `{0}` appears twice")]
    DuplicateAuthor(String),
    #[error("group `{group}` has no defined values of `{variable}`")]
    EmptyGroup { group: String, variable: String },
    #[error("at least 2 groups are required, got {0}")]
    TooFewGroups(usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Column keys present in every row, in the first row's order.
pub fn available_variables(rows: &[ProfileRecord]) -> Vec<String> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let mut keys: Vec<String> = crate::ingest::SCALAR_KEYS.iter().map(|s| s.to_string()).collect();
    for f in first.families.keys() {
        let s = crate::ingest::family_suffix(f);
        keys.extend(crate::ingest::DIMENSION_KEYS.iter().map(|d| format!("{d}_{s}")));
    }
    keys.retain(|k| rows.iter().all(|r| r.value(k).is_some()));
    keys
}

/// The column of `key` over `rows`, checking that it exists.
pub fn column(rows: &[ProfileRecord], key: &str) -> Result<Vec<Option<f64>>, ReportError> {
    rows.iter()
        .map(|r| r.value(key))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| ReportError::UnknownVariable {
            name: key.to_string(),
            available: available_variables(rows),
        })
}

pub(crate) fn check_variables(rows: &[ProfileRecord], vars: &[String]) -> Result<(), ReportError> {
    let available = available_variables(rows);
    match vars.iter().find(|v| !available.contains(v)) {
        Some(v) => Err(ReportError::UnknownVariable {
            name: v.clone(),
            available,
        }),
        None => Ok(()),
    }
}

/// Human label for a column key: `pi_sjr` → `P/I SJR`, `papers` → `#Papers`.
pub fn variable_label(key: &str) -> String {
    match key {
        "papers" => return "#Papers".into(),
        "cites" => return "#Cites".into(),
        "h" => return "h".into(),
        _ => {}
    }
    let Some((dim, suffix)) = key.split_once('_') else {
        return key.to_string();
    };
    let dim = match dim {
        "p" => "P",
        "i" => "I",
        "r" => "R",
        "pi" => "P/I",
        "pr" => "P/R",
        "ir" => "I/R",
        "pi2r" => "(P+I)/2R",
        other => other,
    };
    format!("{dim} {}", suffix.to_uppercase())
}

/// Rows bucketed by group in group-name order; row order kept inside a group.
pub(crate) fn by_group(rows: &[ProfileRecord]) -> Result<Vec<(String, Vec<&ProfileRecord>)>, ReportError> {
    let mut map: std::collections::BTreeMap<String, Vec<&ProfileRecord>> = Default::default();
    for r in rows {
        let g = r
            .group
            .clone()
            .ok_or_else(|| ReportError::MissingGroup(r.author_id.clone()))?;
        map.entry(g).or_default().push(r);
    }
    Ok(map.into_iter().collect())
}
