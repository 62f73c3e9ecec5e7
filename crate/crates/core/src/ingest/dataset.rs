use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::tables::{load_events, load_impact_table, load_scalars, write_events, write_impact_table, write_scalars};
use super::{Format, IngestError, ScalarMetrics};
use crate::model::{AuthorCorpus, EventKind, ImpactTable, YearWindow};

/// Whether cross-file inconsistencies abort assembly or are only logged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ValidationMode {
    #[default]
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    /// A scalars row with no matching events.
    ScalarsWithoutCorpus { author_id: String },
    /// In-window publication total disagrees with the supplied paper count.
    PaperCountMismatch {
        author_id: String,
        events: u64,
        papers: u64,
    },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::ScalarsWithoutCorpus { author_id } => {
                write!(f, "scalars given for `{author_id}` but no events were loaded")
            }
            ValidationIssue::PaperCountMismatch {
                author_id,
                events,
                papers,
            } => write!(
                f,
                "`{author_id}`: {events} publications inside the window but papers = {papers}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub impact_table: ImpactTable,
    /// Sorted by author id, ids unique.
    pub corpora: Vec<AuthorCorpus>,
    pub scalars: BTreeMap<String, ScalarMetrics>,
    pub window: YearWindow,
}

const IMPACT_STEM: &str = "impact_table";
const EVENTS_STEM: &str = "events";
const SCALARS_STEM: &str = "scalars";

impl Dataset {
    /// Builds a dataset and checks it. In [`ValidationMode::Warn`] the issues
    /// are logged and returned; in [`ValidationMode::Fail`] the first one is
    /// an error.
    pub fn assemble(
        impact_table: ImpactTable,
        mut corpora: Vec<AuthorCorpus>,
        scalars: BTreeMap<String, ScalarMetrics>,
        window: YearWindow,
        mode: ValidationMode,
    ) -> Result<(Self, Vec<ValidationIssue>), IngestError> {
        corpora.sort_by(|a, b| a.author_id().cmp(b.author_id()));
        if let Some(w) = corpora.windows(2).find(|w| w[0].author_id() == w[1].author_id()) {
            return Err(IngestError::Validation(format!(
                "author `{}` appears in more than one corpus",
                w[0].author_id()
            )));
        }
        let dataset = Self {
            impact_table,
            corpora,
            scalars,
            window,
        };
        let issues = dataset.validate();
        match (mode, issues.first()) {
            (ValidationMode::Fail, Some(issue)) => Err(IngestError::Validation(issue.to_string())),
            _ => {
                for issue in &issues {
                    log::warn!("{issue}");
                }
                Ok((dataset, issues))
            }
        }
    }

    pub fn validate(&self) -> Vec<ValidationIssue> {
        let ids: BTreeSet<&str> = self.corpora.iter().map(AuthorCorpus::author_id).collect();
        let mut issues: Vec<ValidationIssue> = self
            .scalars
            .keys()
            .filter(|k| !ids.contains(k.as_str()))
            .map(|k| ValidationIssue::ScalarsWithoutCorpus { author_id: k.clone() })
            .collect();
        for c in &self.corpora {
            if c.events_of(EventKind::Publication).next().is_none() {
                continue;
            }
            if let Some(m) = self.scalars.get(c.author_id()) {
                let events = c.total_in_window(EventKind::Publication, &self.window);
                if events != m.papers {
                    issues.push(ValidationIssue::PaperCountMismatch {
                        author_id: c.author_id().to_string(),
                        events,
                        papers: m.papers,
                    });
                }
            }
        }
        issues
    }

    /// Writes `impact_table.<ext>`, `events.<ext>` and `scalars.<ext>` into `dir`.
    pub fn write_dir(&self, dir: &Path, format: Format) -> Result<(), IngestError> {
        std::fs::create_dir_all(dir)?;
        let open = |stem: &str| -> Result<BufWriter<File>, IngestError> {
            Ok(BufWriter::new(File::create(dir.join(format!("{stem}.{format}")))?))
        };
        let mut w = open(IMPACT_STEM)?;
        write_impact_table(&mut w, &self.impact_table, format)?;
        w.flush()?;
        let mut w = open(EVENTS_STEM)?;
        write_events(&mut w, &self.corpora, format)?;
        w.flush()?;
        let mut w = open(SCALARS_STEM)?;
        write_scalars(&mut w, &self.scalars, format)?;
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`Dataset::write_dir`]. A missing scalars file means no scalars.
    pub fn load_dir(
        dir: &Path,
        format: Format,
        window: YearWindow,
        mode: ValidationMode,
    ) -> Result<(Self, Vec<ValidationIssue>), IngestError> {
        let open = |stem: &str| -> Result<BufReader<File>, IngestError> {
            Ok(BufReader::new(File::open(dir.join(format!("{stem}.{format}")))?))
        };
        let table = load_impact_table(open(IMPACT_STEM)?, format)?;
        let corpora = load_events(open(EVENTS_STEM)?, format)?;
        let scalars_path = dir.join(format!("{SCALARS_STEM}.{format}"));
        let scalars = if scalars_path.exists() {
            load_scalars(open(SCALARS_STEM)?, format)?
        } else {
            BTreeMap::new()
        };
        Self::assemble(table, corpora, scalars, window, mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Event, JournalRef};

    fn corpus(id: &str, pubs: u64, year: i32) -> AuthorCorpus {
        let e = Event::new(EventKind::Publication, JournalRef::new("J").unwrap(), year, pubs).unwrap();
        AuthorCorpus::new(id, Some("G".into()), vec![e]).unwrap()
    }

    fn scalars(entries: &[(&str, u64)]) -> BTreeMap<String, ScalarMetrics> {
        entries
            .iter()
            .map(|(id, papers)| {
                (
                    id.to_string(),
                    ScalarMetrics {
                        papers: *papers,
                        cites: 100,
                        h: 1,
                    },
                )
            })
            .collect()
    }

    #[test]
    fn consistent_dataset_has_no_issues() {
        let (d, issues) = Dataset::assemble(
            ImpactTable::new(),
            vec![corpus("b", 3, 2010), corpus("a", 2, 2009)],
            scalars(&[("a", 2)]),
            YearWindow::default(),
            ValidationMode::Fail,
        )
        .unwrap();
        assert!(issues.is_empty());
        assert_eq!(d.corpora[0].author_id(), "a");
    }

    #[test]
    fn mismatches_warn_or_fail() {
        let build = |mode| {
            Dataset::assemble(
                ImpactTable::new(),
                vec![corpus("a", 2, 2008)],
                scalars(&[("a", 2), ("ghost", 1)]),
                YearWindow::default(),
                mode,
            )
        };
        let (_, issues) = build(ValidationMode::Warn).unwrap();
        assert_eq!(
            issues,
            vec![
                ValidationIssue::ScalarsWithoutCorpus {
                    author_id: "ghost".into()
                },
                ValidationIssue::PaperCountMismatch {
                    author_id: "a".into(),
                    events: 0,
                    papers: 2
                },
            ]
        );
        assert!(matches!(build(ValidationMode::Fail), Err(IngestError::Validation(_))));
    }

    #[test]
    fn duplicate_corpora_rejected() {
        let r = Dataset::assemble(
            ImpactTable::new(),
            vec![corpus("a", 1, 2009), corpus("a", 1, 2010)],
            BTreeMap::new(),
            YearWindow::default(),
            ValidationMode::Warn,
        );
        assert!(matches!(r, Err(IngestError::Validation(_))));
    }
}
