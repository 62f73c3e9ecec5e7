//! Weighted-average impact dimensions and their ratios.
//!
//! For one event kind, the dimension is the count-weighted mean of the
//! impact values of the journal-years involved:
//!
//! ```text
//! D = Σ (count / T) · impact(journal, year),   T = Σ count over matched events
//! ```
//!
//! The impact value is always looked up for the event's own year.
//! Publication events yield the production dimension P, citation events the
//! impact dimension I and reference events the reference dimension R.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{
    merge_counts, AuthorCorpus, Coverage, CoverageDiagnostics, Event, EventKind, ImpactTable, IndicatorName,
    IndicatorProfile, JournalRef, YearWindow,
};
use crate::stats::KahanSum;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("no {indicator} impact value for journal `{journal}` in {year}")]
    MissingImpact {
        journal: String,
        year: i32,
        indicator: String,
    },
    #[error("events of different kinds ({0} and {1}) passed to a single dimension")]
    MixedKinds(EventKind, EventKind),
    #[error("duplicate author id `{0}` in batch")]
    DuplicateAuthor(String),
    #[error("author `{author_id}`: {source}")]
    Author {
        author_id: String,
        #[source]
        source: Box<EngineError>,
    },
    #[error("invalid policy `{0}`")]
    InvalidPolicy(String),
}

/// What to do with an event whose journal-year has no impact value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissingValuePolicy {
    /// Fail on the first gap.
    Strict,
    /// Skip the event; weights are renormalized over matched counts.
    #[default]
    DropAndRenormalize,
    /// Use the same journal's value from the nearest year within
    /// `max_distance` (ties go to the earlier year), else drop.
    NearestYear { max_distance: u32 },
}

impl fmt::Display for MissingValuePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissingValuePolicy::Strict => f.write_str("strict"),
            MissingValuePolicy::DropAndRenormalize => f.write_str("drop"),
            MissingValuePolicy::NearestYear { max_distance } => write!(f, "nearest:{max_distance}"),
        }
    }
}

impl FromStr for MissingValuePolicy {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::Strict),
            "drop" => Ok(Self::DropAndRenormalize),
            _ => s
                .strip_prefix("nearest:")
                .and_then(|k| k.parse().ok())
                .map(|max_distance| Self::NearestYear { max_distance })
                .ok_or_else(|| EngineError::InvalidPolicy(s.to_string())),
        }
    }
}

/// Which event years contribute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowPolicy {
    /// Only events with year inside the window, for every kind.
    #[default]
    StrictWindow,
    /// Citation and reference events outside the window also contribute,
    /// each with the impact value of its own year. Publications stay
    /// restricted to the window.
    OpenReferences,
}

impl fmt::Display for WindowPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowPolicy::StrictWindow => f.write_str("strict"),
            WindowPolicy::OpenReferences => f.write_str("open-references"),
        }
    }
}

impl FromStr for WindowPolicy {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::StrictWindow),
            "open-references" => Ok(Self::OpenReferences),
            _ => Err(EngineError::InvalidPolicy(s.to_string())),
        }
    }
}

impl WindowPolicy {
    fn admits(&self, kind: EventKind, window: &YearWindow, year: i32) -> bool {
        match (self, kind) {
            (WindowPolicy::OpenReferences, EventKind::Citation | EventKind::Reference) => true,
            _ => window.contains(year),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub indicator: IndicatorName,
    pub window: YearWindow,
    pub missing: MissingValuePolicy,
    pub window_policy: WindowPolicy,
}

impl ProfileOptions {
    pub fn new(indicator: IndicatorName) -> Self {
        Self {
            indicator,
            window: YearWindow::default(),
            missing: MissingValuePolicy::default(),
            window_policy: WindowPolicy::default(),
        }
    }
}

/// One matched journal-year and its share of a dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub journal: JournalRef,
    pub year: i32,
    /// Year the impact value was taken from; differs from `year` only under
    /// [`MissingValuePolicy::NearestYear`].
    pub impact_year: i32,
    pub count: u64,
    pub impact: f64,
    pub weight: f64,
}

impl Contribution {
    pub fn term(&self) -> f64 {
        self.weight * self.impact
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedImpact {
    pub value: Option<f64>,
    pub coverage: CoverageDiagnostics,
    /// In (journal, year) order.
    pub contributions: Vec<Contribution>,
}

fn lookup(
    table: &ImpactTable,
    journal: &JournalRef,
    year: i32,
    indicator: &IndicatorName,
    missing: MissingValuePolicy,
) -> Result<Option<(i32, f64)>, EngineError> {
    if let Some(v) = table.get(journal, year, indicator) {
        return Ok(Some((year, v)));
    }
    match missing {
        MissingValuePolicy::Strict => Err(EngineError::MissingImpact {
            journal: journal.to_string(),
            year,
            indicator: indicator.to_string(),
        }),
        MissingValuePolicy::DropAndRenormalize => Ok(None),
        MissingValuePolicy::NearestYear { max_distance } => Ok(table
            .years(journal, indicator)
            .into_iter()
            .filter(|(y, _)| y.abs_diff(year) <= max_distance)
            // ascending years, so min_by_key keeps the earlier of two ties
            .min_by_key(|(y, _)| y.abs_diff(year))),
    }
}

/// Count-weighted mean impact over events of a single kind.
///
/// Returns an undefined value (with zeroed matched count) when nothing
/// matches; an empty input is not an error.
pub fn weighted_mean_impact<'a>(
    events: impl IntoIterator<Item = &'a Event>,
    table: &ImpactTable,
    options: &ProfileOptions,
) -> Result<WeightedImpact, EngineError> {
    let mut kind: Option<EventKind> = None;
    let mut admitted = Vec::new();
    for e in events {
        match kind {
            None => kind = Some(e.kind()),
            Some(k) if k != e.kind() => return Err(EngineError::MixedKinds(k, e.kind())),
            _ => {}
        }
        if options.window_policy.admits(e.kind(), &options.window, e.year()) {
            admitted.push(e);
        }
    }

    // merged and ordered by (journal id, year)
    let merged = merge_counts(admitted);
    let mut coverage = CoverageDiagnostics::default();
    let mut matched = Vec::with_capacity(merged.len());
    for ((journal, year), count) in merged {
        coverage.total_count += count;
        match lookup(table, &journal, year, &options.indicator, options.missing)? {
            Some((impact_year, impact)) => {
                coverage.matched_count += count;
                matched.push((journal, year, impact_year, count, impact));
            }
            None => coverage.dropped_count += count,
        }
    }

    if coverage.matched_count == 0 {
        return Ok(WeightedImpact {
            value: None,
            coverage,
            contributions: Vec::new(),
        });
    }

    let total = coverage.matched_count as f64;
    let mut acc = KahanSum::new();
    let contributions: Vec<Contribution> = matched
        .into_iter()
        .map(|(journal, year, impact_year, count, impact)| {
            let weight = count as f64 / total;
            acc.add(weight * impact);
            Contribution {
                journal,
                year,
                impact_year,
                count,
                impact,
                weight,
            }
        })
        .collect();

    Ok(WeightedImpact {
        value: Some(acc.total()),
        coverage,
        contributions,
    })
}

/// P, I, R and the four ratios for one author and one indicator family.
pub fn compute_profile(
    corpus: &AuthorCorpus,
    table: &ImpactTable,
    options: &ProfileOptions,
) -> Result<IndicatorProfile, EngineError> {
    let mut coverage = Coverage::default();
    let mut dims = [None; 3];
    for (slot, kind) in dims.iter_mut().zip(EventKind::ALL) {
        let w = weighted_mean_impact(corpus.events_of(kind), table, options)?;
        *coverage.get_mut(kind) = w.coverage;
        *slot = w.value;
    }
    Ok(IndicatorProfile::from_dimensions(
        corpus.author_id().to_string(),
        corpus.group().map(str::to_string),
        options.indicator.clone(),
        options.window,
        (dims[0], dims[1], dims[2]),
        coverage,
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchOptions {
    /// Abort on the first failing author (in author-id order).
    pub fail_fast: bool,
    /// Evaluate authors on the rayon pool. Output is identical either way.
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    /// Sorted by author id.
    pub profiles: Vec<IndicatorProfile>,
    /// Authors that failed, sorted by author id.
    pub failures: Vec<(String, EngineError)>,
}

pub fn compute_profiles(
    corpora: &[AuthorCorpus],
    table: &ImpactTable,
    options: &ProfileOptions,
    batch: BatchOptions,
) -> Result<BatchOutcome, EngineError> {
    let mut seen = BTreeSet::new();
    for c in corpora {
        if !seen.insert(c.author_id()) {
            return Err(EngineError::DuplicateAuthor(c.author_id().to_string()));
        }
    }
    let mut ordered: Vec<&AuthorCorpus> = corpora.iter().collect();
    ordered.sort_by(|a, b| a.author_id().cmp(b.author_id()));

    let results: Vec<Result<IndicatorProfile, EngineError>> = if batch.parallel {
        ordered.par_iter().map(|c| compute_profile(c, table, options)).collect()
    } else {
        ordered.iter().map(|c| compute_profile(c, table, options)).collect()
    };

    let mut outcome = BatchOutcome {
        profiles: Vec::with_capacity(results.len()),
        failures: Vec::new(),
    };
    for (corpus, result) in ordered.iter().zip(results) {
        match result {
            Ok(p) => outcome.profiles.push(p),
            Err(e) if batch.fail_fast => {
                return Err(EngineError::Author {
                    author_id: corpus.author_id().to_string(),
                    source: Box::new(e),
                })
            }
            Err(e) => outcome.failures.push((corpus.author_id().to_string(), e)),
        }
    }
    Ok(outcome)
}
