//! Domain types shared by the engine, the loaders and the reports.
//!
//! Everything here is immutable once built. Constructors validate their
//! invariants and return [`ModelError`] on violation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid year window {start}:{end} (start must not exceed end)")]
    InvertedWindow { start: i32, end: i32 },
    #[error("cannot parse year window `{0}` (expected START:END)")]
    WindowSyntax(String),
    #[error("journal identifier must be non-empty")]
    EmptyJournal,
    #[error("indicator name must be non-empty")]
    EmptyIndicator,
    #[error("author identifier must be non-empty")]
    EmptyAuthor,
    #[error("group label must be non-empty when present")]
    EmptyGroup,
    #[error("event count must be at least 1")]
    ZeroCount,
    #[error("unknown event kind `{0}` (expected publication, citation or reference)")]
    UnknownKind(String),
    #[error("impact value for ({journal}, {year}, {indicator}) must be finite and non-negative, got {value}")]
    InvalidImpact {
        journal: String,
        year: i32,
        indicator: String,
        value: f64,
    },
    #[error("duplicate impact entry for ({journal}, {year}, {indicator})")]
    DuplicateImpact {
        journal: String,
        year: i32,
        indicator: String,
    },
}

/// Inclusive range of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YearWindow {
    start: i32,
    end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Result<Self, ModelError> {
        if start > end {
            return Err(ModelError::InvertedWindow { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> i32 {
        self.start
    }

    pub fn end(&self) -> i32 {
        self.end
    }

    /// Number of years covered, `end - start + 1`.
    pub fn length(&self) -> u32 {
        (self.end - self.start) as u32 + 1
    }

    pub fn contains(&self, year: i32) -> bool {
        self.start <= year && year <= self.end
    }
}

impl Default for YearWindow {
    fn default() -> Self {
        Self { start: 2009, end: 2013 }
    }
}

impl fmt::Display for YearWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl FromStr for YearWindow {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| ModelError::WindowSyntax(s.to_string()))?;
        let start = a.trim().parse().map_err(|_| ModelError::WindowSyntax(s.to_string()))?;
        let end = b.trim().parse().map_err(|_| ModelError::WindowSyntax(s.to_string()))?;
        Self::new(start, end)
    }
}

/// Canonical journal identifier. Matching is exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct JournalRef(String);

impl JournalRef {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyJournal);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for JournalRef {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<JournalRef> for String {
    fn from(value: JournalRef) -> Self {
        value.0
    }
}

impl fmt::Display for JournalRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Name of a journal impact indicator family (case-sensitive).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IndicatorName(String);

impl IndicatorName {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyIndicator);
        }
        Ok(Self(name))
    }

    /// SCImago journal rank.
    pub fn sjr() -> Self {
        Self("SJR".to_string())
    }

    /// Source normalized impact per paper.
    pub fn snip() -> Self {
        Self("SNIP".to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for IndicatorName {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<IndicatorName> for String {
    fn from(value: IndicatorName) -> Self {
        value.0
    }
}

impl FromStr for IndicatorName {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for IndicatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Lookup of journal impact values keyed by (journal, indicator, year).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImpactTable {
    entries: BTreeMap<(JournalRef, IndicatorName, i32), f64>,
}

impl ImpactTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        journal: JournalRef,
        year: i32,
        indicator: IndicatorName,
        value: f64,
    ) -> Result<(), ModelError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ModelError::InvalidImpact {
                journal: journal.0,
                year,
                indicator: indicator.0,
                value,
            });
        }
        let key = (journal, indicator, year);
        if self.entries.contains_key(&key) {
            let (journal, indicator, year) = key;
            return Err(ModelError::DuplicateImpact {
                journal: journal.0,
                year,
                indicator: indicator.0,
            });
        }
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn get(&self, journal: &JournalRef, year: i32, indicator: &IndicatorName) -> Option<f64> {
        // BTreeMap lookups need an owned key; the clone is two short strings.
        self.entries.get(&(journal.clone(), indicator.clone(), year)).copied()
    }

    /// Years with a value for `(journal, indicator)`, ascending.
    pub fn years(&self, journal: &JournalRef, indicator: &IndicatorName) -> Vec<(i32, f64)> {
        let lo = (journal.clone(), indicator.clone(), i32::MIN);
        let hi = (journal.clone(), indicator.clone(), i32::MAX);
        self.entries.range(lo..=hi).map(|((_, _, y), v)| (*y, *v)).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in (journal, indicator, year) order.
    pub fn iter(&self) -> impl Iterator<Item = (&JournalRef, i32, &IndicatorName, f64)> {
        self.entries.iter().map(|((j, n, y), v)| (j, *y, n, *v))
    }

    pub fn indicators(&self) -> Vec<IndicatorName> {
        let mut names: Vec<IndicatorName> = self.entries.keys().map(|(_, n, _)| n.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    /// Copy of the table with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        let mut out = Self::new();
        for (j, y, n, v) in self.iter() {
            out.insert(j.clone(), y, n.clone(), v * factor)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Publication,
    Citation,
    Reference,
}

impl EventKind {
    pub const ALL: [EventKind; 3] = [EventKind::Publication, EventKind::Citation, EventKind::Reference];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Publication => "publication",
            EventKind::Citation => "citation",
            EventKind::Reference => "reference",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "publication" => Ok(EventKind::Publication),
            "citation" => Ok(EventKind::Citation),
            "reference" => Ok(EventKind::Reference),
            _ => Err(ModelError::UnknownKind(s.to_string())),
        }
    }
}

/// A counted occurrence of one journal-year in an author's record.
///
/// For publications the count is the number of papers in that journal-year;
/// for citations, the number of times that journal-year cites the author;
/// for references, the number of times the author's papers cite it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    kind: EventKind,
    journal: JournalRef,
    year: i32,
    count: u64,
}

impl Event {
    pub fn new(kind: EventKind, journal: JournalRef, year: i32, count: u64) -> Result<Self, ModelError> {
        if count == 0 {
            return Err(ModelError::ZeroCount);
        }
        Ok(Self {
            kind,
            journal,
            year,
            count,
        })
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    pub fn journal(&self) -> &JournalRef {
        &self.journal
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// All events recorded for one author.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorCorpus {
    author_id: String,
    group: Option<String>,
    events: Vec<Event>,
}

impl AuthorCorpus {
    pub fn new(author_id: impl Into<String>, group: Option<String>, events: Vec<Event>) -> Result<Self, ModelError> {
        let author_id = author_id.into();
        if author_id.is_empty() {
            return Err(ModelError::EmptyAuthor);
        }
        if matches!(&group, Some(g) if g.is_empty()) {
            return Err(ModelError::EmptyGroup);
        }
        Ok(Self {
            author_id,
            group,
            events,
        })
    }

    pub fn author_id(&self) -> &str {
        &self.author_id
    }

    pub fn group(&self) -> Option<&str> {
        self.group.as_deref()
    }

    pub fn with_group(mut self, group: Option<String>) -> Result<Self, ModelError> {
        if matches!(&group, Some(g) if g.is_empty()) {
            return Err(ModelError::EmptyGroup);
        }
        self.group = group;
        Ok(self)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Counts of one kind summed per (journal, year).
    pub fn merged_counts(&self, kind: EventKind) -> BTreeMap<(JournalRef, i32), u64> {
        merge_counts(self.events_of(kind))
    }

    /// Total count of one kind with year inside `window`.
    pub fn total_in_window(&self, kind: EventKind, window: &YearWindow) -> u64 {
        self.events_of(kind)
            .filter(|e| window.contains(e.year))
            .map(|e| e.count)
            .sum()
    }
}

/// Sums event counts per (journal, year). The result is independent of
/// the order of `events`.
pub fn merge_counts<'a>(events: impl IntoIterator<Item = &'a Event>) -> BTreeMap<(JournalRef, i32), u64> {
    let mut out = BTreeMap::new();
    for e in events {
        *out.entry((e.journal.clone(), e.year)).or_insert(0) += e.count;
    }
    out
}

/// How many event counts of one kind were usable against the impact table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageDiagnostics {
    pub total_count: u64,
    pub matched_count: u64,
    pub dropped_count: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub publication: CoverageDiagnostics,
    pub citation: CoverageDiagnostics,
    pub reference: CoverageDiagnostics,
}

impl Coverage {
    pub fn get(&self, kind: EventKind) -> &CoverageDiagnostics {
        match kind {
            EventKind::Publication => &self.publication,
            EventKind::Citation => &self.citation,
            EventKind::Reference => &self.reference,
        }
    }

    pub fn get_mut(&mut self, kind: EventKind) -> &mut CoverageDiagnostics {
        match kind {
            EventKind::Publication => &mut self.publication,
            EventKind::Citation => &mut self.citation,
            EventKind::Reference => &mut self.reference,
        }
    }
}

/// The four normalization ratios. `None` marks an undefined ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub p_over_i: Option<f64>,
    pub p_over_r: Option<f64>,
    pub i_over_r: Option<f64>,
    pub pi_over_2r: Option<f64>,
}

impl Ratios {
    pub fn from_dimensions(p: Option<f64>, i: Option<f64>, r: Option<f64>) -> Self {
        let div = |num: Option<f64>, den: Option<f64>| match (num, den) {
            (Some(n), Some(d)) if d > 0.0 => Some(n / d),
            _ => None,
        };
        let pi_over_2r = match (p, i, r) {
            (Some(p), Some(i), Some(r)) if r > 0.0 => Some((p + i) / (2.0 * r)),
            _ => None,
        };
        Self {
            p_over_i: div(p, i),
            p_over_r: div(p, r),
            i_over_r: div(i, r),
            pi_over_2r,
        }
    }
}

/// Per-author dimensions and ratios for one indicator family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorProfile {
    pub author_id: String,
    pub group: Option<String>,
    pub indicator: IndicatorName,
    pub window: YearWindow,
    pub p: Option<f64>,
    pub i: Option<f64>,
    pub r: Option<f64>,
    pub ratios: Ratios,
    pub coverage: Coverage,
}

impl IndicatorProfile {
    /// Builds a profile, deriving the ratio fields from the dimensions.
    pub fn from_dimensions(
        author_id: String,
        group: Option<String>,
        indicator: IndicatorName,
        window: YearWindow,
        (p, i, r): (Option<f64>, Option<f64>, Option<f64>),
        coverage: Coverage,
    ) -> Self {
        Self {
            author_id,
            group,
            indicator,
            window,
            p,
            i,
            r,
            ratios: Ratios::from_dimensions(p, i, r),
            coverage,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn j(s: &str) -> JournalRef {
        JournalRef::new(s).unwrap()
    }

    #[test]
    fn window_membership() {
        let w = YearWindow::new(2009, 2013).unwrap();
        assert!(w.contains(2009));
        assert!(!w.contains(2014));
        assert!(!w.contains(2008));
        assert_eq!(w.length(), 5);
        let single = YearWindow::new(2009, 2009).unwrap();
        assert!(single.contains(2009));
        assert_eq!(single.length(), 1);
    }

    #[test]
    fn window_rejects_inversion_and_parses() {
        assert!(YearWindow::new(2013, 2009).is_err());
        assert_eq!("2009:2013".parse::<YearWindow>().unwrap(), YearWindow::default());
        assert!("2009-2013".parse::<YearWindow>().is_err());
        assert!("2013:2009".parse::<YearWindow>().is_err());
    }

    #[test]
    fn empty_identifiers_rejected() {
        assert_eq!(JournalRef::new(""), Err(ModelError::EmptyJournal));
        assert_eq!(IndicatorName::new(""), Err(ModelError::EmptyIndicator));
        assert!(AuthorCorpus::new("", None, vec![]).is_err());
        assert!(AuthorCorpus::new("a", Some(String::new()), vec![]).is_err());
    }

    #[test]
    fn event_count_must_be_positive() {
        assert_eq!(
            Event::new(EventKind::Publication, j("J"), 2010, 0),
            Err(ModelError::ZeroCount)
        );
    }

    #[test]
    fn kind_parses_case_insensitively() {
        assert_eq!("Publication".parse::<EventKind>().unwrap(), EventKind::Publication);
        assert_eq!("CITATION".parse::<EventKind>().unwrap(), EventKind::Citation);
        assert_eq!("reference".parse::<EventKind>().unwrap(), EventKind::Reference);
        assert!("cite".parse::<EventKind>().is_err());
    }

    #[test]
    fn impact_table_rejects_duplicates_and_negatives() {
        let mut t = ImpactTable::new();
        t.insert(j("J"), 2010, IndicatorName::sjr(), 1.0).unwrap();
        assert!(matches!(
            t.insert(j("J"), 2010, IndicatorName::sjr(), 2.0),
            Err(ModelError::DuplicateImpact { .. })
        ));
        // same journal-year under another family is a distinct key
        t.insert(j("J"), 2010, IndicatorName::snip(), 2.0).unwrap();
        assert!(t.insert(j("K"), 2010, IndicatorName::sjr(), -0.1).is_err());
        assert!(t.insert(j("K"), 2010, IndicatorName::sjr(), f64::NAN).is_err());
        assert_eq!(t.get(&j("J"), 2010, &IndicatorName::snip()), Some(2.0));
        assert_eq!(t.get(&j("J"), 2011, &IndicatorName::snip()), None);
        // names are case-sensitive
        assert_eq!(t.get(&j("J"), 2010, &IndicatorName::new("sjr").unwrap()), None);
    }

    #[test]
    fn years_lists_one_journal_family() {
        let mut t = ImpactTable::new();
        for (y, v) in [(2012, 3.0), (2009, 1.0), (2010, 2.0)] {
            t.insert(j("J"), y, IndicatorName::sjr(), v).unwrap();
        }
        t.insert(j("JA"), 2011, IndicatorName::sjr(), 9.0).unwrap();
        t.insert(j("J"), 2011, IndicatorName::snip(), 9.0).unwrap();
        assert_eq!(
            t.years(&j("J"), &IndicatorName::sjr()),
            vec![(2009, 1.0), (2010, 2.0), (2012, 3.0)]
        );
    }

    #[test]
    fn ratios_follow_dimensions() {
        let r = Ratios::from_dimensions(Some(1.0), Some(2.0), Some(4.0));
        assert_eq!(r.p_over_i, Some(0.5));
        assert_eq!(r.p_over_r, Some(0.25));
        assert_eq!(r.i_over_r, Some(0.5));
        assert_eq!(r.pi_over_2r, Some(0.375));

        let r = Ratios::from_dimensions(Some(1.0), Some(0.0), None);
        assert_eq!(r, Ratios::default());
    }

    fn arb_events() -> impl Strategy<Value = Vec<Event>> {
        prop::collection::vec(
            (0usize..3, 0usize..3, 2008i32..2012, 1u64..20)
                .prop_map(|(k, jn, y, c)| Event::new(EventKind::ALL[k], j(["A", "B", "C"][jn]), y, c).unwrap()),
            0..30,
        )
    }

    proptest! {
        #[test]
        fn aggregation_is_order_independent(events in arb_events(), seed in any::<u64>()) {
            let mut shuffled = events.clone();
            // deterministic Fisher-Yates from the seed
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            for kind in EventKind::ALL {
                let a = merge_counts(events.iter().filter(|e| e.kind() == kind));
                let b = merge_counts(shuffled.iter().filter(|e| e.kind() == kind));
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn stored_ratios_recompute_bit_for_bit(
            p in proptest::option::of(0.0f64..10.0),
            i in proptest::option::of(0.0f64..10.0),
            r in proptest::option::of(0.0f64..10.0),
        ) {
            let prof = IndicatorProfile::from_dimensions(
                "a".into(), None, IndicatorName::sjr(), YearWindow::default(), (p, i, r), Coverage::default());
            prop_assert_eq!(prof.ratios, Ratios::from_dimensions(prof.p, prof.i, prof.r));
            if let (Some(pr), Some(ir), Some(m)) = (prof.ratios.p_over_r, prof.ratios.i_over_r, prof.ratios.pi_over_2r) {
                prop_assert!((m - (pr + ir) / 2.0).abs() <= 1e-12 * m.abs().max(1.0));
            }
        }
    }
}
