use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::render::{Cell, ReportTable};
use super::{by_group, check_variables, ReportError};
use crate::ingest::{family_suffix, FamilyValues, ProfileRecord, ScalarMetrics, DIMENSION_KEYS};
use crate::model::{IndicatorName, IndicatorProfile};
use crate::stats::{describe, variance_decomposition, DescriptiveSummary, GroupedSample, VarianceDecomposition};

/// One author with supplied scalars and every requested family.
pub type AuthorTableRow = ProfileRecord;

/// Joins per-family profiles and scalars into one row per author, sorted
/// with [`sort_author_rows`]. Scalars are optional per author.
pub fn author_table(
    families: &[(IndicatorName, Vec<IndicatorProfile>)],
    scalars: &BTreeMap<String, ScalarMetrics>,
) -> Result<Vec<AuthorTableRow>, ReportError> {
    let mut per_family: Vec<BTreeMap<&str, &IndicatorProfile>> = Vec::with_capacity(families.len());
    for (_, profiles) in families {
        let mut m = BTreeMap::new();
        for p in profiles {
            if m.insert(p.author_id.as_str(), p).is_some() {
                return Err(ReportError::DuplicateAuthor(p.author_id.clone()));
            }
        }
        per_family.push(m);
    }
    let authors: BTreeSet<&str> = per_family.iter().flat_map(|m| m.keys().copied()).collect();
    let mut rows = Vec::with_capacity(authors.len());
    for author in authors {
        let mut values = BTreeMap::new();
        let mut group = None;
        for ((family, _), m) in families.iter().zip(&per_family) {
            let p = m.get(author).ok_or_else(|| ReportError::MissingProfile {
                author_id: author.to_string(),
                family: family.to_string(),
            })?;
            group = group.or_else(|| p.group.clone());
            values.insert(family.clone(), FamilyValues::from_profile(p));
        }
        rows.push(ProfileRecord {
            author_id: author.to_string(),
            group,
            scalars: scalars.get(author).copied(),
            families: values,
        });
    }
    sort_author_rows(&mut rows);
    Ok(rows)
}

/// Group, then descending h, then descending cites, then author id.
/// Rows without a group or scalars sort last within their level.
pub fn sort_author_rows(rows: &mut [AuthorTableRow]) {
    rows.sort_by(|a, b| {
        let key = |r: &ProfileRecord| {
            (
                r.group.is_none(),
                r.group.clone(),
                Reverse(r.scalars.map(|s| s.h)),
                Reverse(r.scalars.map(|s| s.cites)),
            )
        };
        key(a).cmp(&key(b)).then_with(|| a.author_id.cmp(&b.author_id))
    });
}

pub fn author_table_report(rows: &[AuthorTableRow], families: &[IndicatorName]) -> ReportTable {
    let mut columns: Vec<String> = ["author_id", "group", "papers", "cites", "h"]
        .map(String::from)
        .to_vec();
    for f in families {
        let s = family_suffix(f);
        columns.extend(DIMENSION_KEYS.iter().map(|d| format!("{d}_{s}")));
    }
    let mut t = ReportTable::new(columns);
    for r in rows {
        let mut cells = vec![
            Cell::text(&r.author_id),
            Cell::text(r.group.clone().unwrap_or_default()),
            Cell::Integer(r.scalars.map(|s| s.papers)),
            Cell::Integer(r.scalars.map(|s| s.cites)),
            Cell::Integer(r.scalars.map(|s| s.h)),
        ];
        for f in families {
            let v = r.families.get(f).copied().unwrap_or_default();
            cells.extend(v.to_array().map(Cell::value));
        }
        t.push(cells);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableSummary {
    pub variable: String,
    pub summary: DescriptiveSummary,
    /// Rows left out because the value was undefined.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummaryBlock {
    pub group: String,
    pub rows: usize,
    pub variables: Vec<VariableSummary>,
}

impl GroupSummaryBlock {
    pub fn get(&self, variable: &str) -> Option<&VariableSummary> {
        self.variables.iter().find(|v| v.variable == variable)
    }
}

fn summarize(rows: &[&ProfileRecord], variable: &str, group: &str) -> Result<VariableSummary, ReportError> {
    let values: Vec<f64> = rows.iter().filter_map(|r| r.value(variable).flatten()).collect();
    if values.is_empty() {
        return Err(ReportError::EmptyGroup {
            group: group.to_string(),
            variable: variable.to_string(),
        });
    }
    Ok(VariableSummary {
        variable: variable.to_string(),
        summary: describe(&values)?,
        excluded: rows.len() - values.len(),
    })
}

/// Per-group descriptive summaries, one block per group in name order.
pub fn group_summary(rows: &[ProfileRecord], variables: &[String]) -> Result<Vec<GroupSummaryBlock>, ReportError> {
    check_variables(rows, variables)?;
    by_group(rows)?
        .into_iter()
        .map(|(group, members)| {
            let vars = variables
                .iter()
                .map(|v| summarize(&members, v, &group))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GroupSummaryBlock {
                group,
                rows: members.len(),
                variables: vars,
            })
        })
        .collect()
}

const SUMMARY_COLUMNS: [&str; 8] = ["n", "excluded", "median", "mean", "std", "min", "max", "range"];

fn summary_cells(v: &VariableSummary) -> Vec<Cell> {
    let s = &v.summary;
    vec![
        Cell::Integer(Some(s.n as u64)),
        Cell::Integer(Some(v.excluded as u64)),
        Cell::value(Some(s.median)),
        Cell::value(Some(s.mean)),
        Cell::value(Some(s.sample_std)),
        Cell::value(Some(s.min)),
        Cell::value(Some(s.max)),
        Cell::value(Some(s.range)),
    ]
}

pub fn group_summary_table(blocks: &[GroupSummaryBlock]) -> ReportTable {
    let mut t = ReportTable::new(["group", "variable"].into_iter().chain(SUMMARY_COLUMNS));
    for b in blocks {
        for v in &b.variables {
            let mut cells = vec![Cell::text(&b.group), Cell::text(&v.variable)];
            cells.extend(summary_cells(v));
            t.push(cells);
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateVariable {
    pub pooled: VariableSummary,
    pub decomposition: VarianceDecomposition,
}

/// Relative difference of one ratio between two families:
/// `(family − baseline) / baseline` for the pooled median and mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossFamilyDelta {
    pub dimension: String,
    pub family: IndicatorName,
    pub baseline: IndicatorName,
    pub median: f64,
    pub baseline_median: f64,
    pub median_delta: Option<f64>,
    pub mean: f64,
    pub baseline_mean: f64,
    pub mean_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub variables: Vec<AggregateVariable>,
    pub deltas: Vec<CrossFamilyDelta>,
}

const RATIO_KEYS: [&str; 4] = ["pi", "pr", "ir", "pi2r"];

fn relative(a: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| (a - base) / base)
}

/// Pooled summaries and within/between decomposition per variable, plus
/// cross-family deltas of every ratio for each pair of families.
pub fn aggregate_report(rows: &[ProfileRecord], variables: &[String]) -> Result<AggregateReport, ReportError> {
    check_variables(rows, variables)?;
    let groups = by_group(rows)?;
    if groups.len() < 2 {
        return Err(ReportError::TooFewGroups(groups.len()));
    }
    let all: Vec<&ProfileRecord> = rows.iter().collect();
    let mut out = Vec::with_capacity(variables.len());
    for v in variables {
        let pooled = summarize(&all, v, "all")?;
        let sample = GroupedSample::new(groups.iter().filter_map(|(g, members)| {
            let vals: Vec<f64> = members.iter().filter_map(|r| r.value(v).flatten()).collect();
            (!vals.is_empty()).then(|| (g.clone(), vals))
        }))?;
        out.push(AggregateVariable {
            pooled,
            decomposition: variance_decomposition(&sample)?,
        });
    }

    let families: Vec<IndicatorName> = rows[0].families.keys().cloned().collect();
    let mut deltas = Vec::new();
    for (a, fa) in families.iter().enumerate() {
        for fb in &families[a + 1..] {
            for dim in RATIO_KEYS {
                let sa = summarize(&all, &format!("{dim}_{}", family_suffix(fa)), "all")?.summary;
                let sb = summarize(&all, &format!("{dim}_{}", family_suffix(fb)), "all")?.summary;
                deltas.push(CrossFamilyDelta {
                    dimension: dim.to_string(),
                    family: fa.clone(),
                    baseline: fb.clone(),
                    median: sa.median,
                    baseline_median: sb.median,
                    median_delta: relative(sa.median, sb.median),
                    mean: sa.mean,
                    baseline_mean: sb.mean,
                    mean_delta: relative(sa.mean, sb.mean),
                });
            }
        }
    }
    Ok(AggregateReport { variables: out, deltas })
}

impl AggregateReport {
    pub fn get(&self, variable: &str) -> Option<&AggregateVariable> {
        self.variables.iter().find(|v| v.pooled.variable == variable)
    }

    pub fn delta(
        &self,
        dimension: &str,
        family: &IndicatorName,
        baseline: &IndicatorName,
    ) -> Option<&CrossFamilyDelta> {
        self.deltas
            .iter()
            .find(|d| d.dimension == dimension && &d.family == family && &d.baseline == baseline)
    }

    pub fn summary_table(&self) -> ReportTable {
        let mut t = ReportTable::new(std::iter::once("variable").chain(SUMMARY_COLUMNS));
        for v in &self.variables {
            let mut cells = vec![Cell::text(&v.pooled.variable)];
            cells.extend(summary_cells(&v.pooled));
            t.push(cells);
        }
        t
    }

    /// Sums of squares; the reduction is rendered as a percentage.
    pub fn variance_table(&self) -> ReportTable {
        let mut t = ReportTable::new(["variable", "within_ss", "between_ss", "total_ss", "pct_reduction"]);
        for v in &self.variables {
            let d = &v.decomposition;
            t.push(vec![
                Cell::text(&v.pooled.variable),
                Cell::value(Some(d.within_ss)),
                Cell::value(Some(d.between_ss)),
                Cell::value(Some(d.total_ss)),
                Cell::value(d.pct_reduction.map(|r| 100.0 * r)),
            ]);
        }
        t
    }

    /// Deltas rendered as percentages.
    pub fn delta_table(&self) -> ReportTable {
        let mut t = ReportTable::new([
            "dimension",
            "family",
            "baseline",
            "median",
            "baseline_median",
            "median_delta_pct",
            "mean",
            "baseline_mean",
            "mean_delta_pct",
        ]);
        for d in &self.deltas {
            t.push(vec![
                Cell::text(&d.dimension),
                Cell::text(d.family.as_str()),
                Cell::text(d.baseline.as_str()),
                Cell::value(Some(d.median)),
                Cell::value(Some(d.baseline_median)),
                Cell::value(d.median_delta.map(|x| 100.0 * x)),
                Cell::value(Some(d.mean)),
                Cell::value(Some(d.baseline_mean)),
                Cell::value(d.mean_delta.map(|x| 100.0 * x)),
            ]);
        }
        t
    }
}
