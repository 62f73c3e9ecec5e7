use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{read_rows, write_rows, Format, IngestError, Position};
use crate::model::{AuthorCorpus, Event, EventKind, ImpactTable, IndicatorName, JournalRef, ModelError};

const IMPACT_HEADER: [&str; 4] = ["journal", "year", "indicator", "value"];
const EVENT_HEADER: [&str; 6] = ["author_id", "group", "kind", "journal", "year", "count"];
const SCALAR_HEADER: [&str; 4] = ["author_id", "papers", "cites", "h"];

#[derive(Debug, Serialize, Deserialize)]
struct ImpactRow {
    journal: String,
    year: i32,
    indicator: String,
    value: f64,
}

fn invalid(at: Position) -> impl FnOnce(ModelError) -> IngestError {
    move |source| IngestError::Invalid { at, source }
}

pub fn load_impact_table(reader: impl Read, format: Format) -> Result<ImpactTable, IngestError> {
    let rows: Vec<(Position, ImpactRow)> = read_rows(reader, format)?;
    let mut table = ImpactTable::new();
    let mut seen: HashMap<(String, i32, String), Position> = HashMap::new();
    for (at, row) in rows {
        let key = (row.journal.clone(), row.year, row.indicator.clone());
        if let Some(&first) = seen.get(&key) {
            return Err(IngestError::DuplicateImpact {
                journal: row.journal,
                year: row.year,
                indicator: row.indicator,
                first,
                second: at,
            });
        }
        seen.insert(key, at);
        let journal = JournalRef::new(row.journal).map_err(invalid(at))?;
        let indicator = IndicatorName::new(row.indicator).map_err(invalid(at))?;
        table
            .insert(journal, row.year, indicator, row.value)
            .map_err(invalid(at))?;
    }
    Ok(table)
}

pub fn write_impact_table(writer: impl Write, table: &ImpactTable, format: Format) -> Result<(), IngestError> {
    let rows: Vec<ImpactRow> = table
        .iter()
        .map(|(j, year, n, value)| ImpactRow {
            journal: j.to_string(),
            year,
            indicator: n.to_string(),
            value,
        })
        .collect();
    write_rows(writer, &IMPACT_HEADER, &rows, format)
}

/// One row of an events file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub author_id: String,
    #[serde(default)]
    pub group: Option<String>,
    pub kind: String,
    pub journal: String,
    pub year: i32,
    /// Signed so that negative input is reported rather than rejected by the parser.
    pub count: i64,
}

impl EventRecord {
    fn to_event(&self, at: Position) -> Result<Event, IngestError> {
        let kind: EventKind = self.kind.parse().map_err(invalid(at))?;
        if self.count < 0 {
            return Err(IngestError::Negative {
                at,
                column: "count",
                value: self.count,
            });
        }
        let journal = JournalRef::new(self.journal.clone()).map_err(invalid(at))?;
        Event::new(kind, journal, self.year, self.count as u64).map_err(invalid(at))
    }

    fn group(&self) -> Option<String> {
        self.group.clone().filter(|g| !g.is_empty())
    }
}

/// Groups records by author. Events inside a corpus are put in canonical
/// (kind, journal, year, count) order; corpora are sorted by author id.
pub(crate) fn corpora_from_records(
    records: impl IntoIterator<Item = (Position, EventRecord)>,
) -> Result<Vec<AuthorCorpus>, IngestError> {
    struct Acc {
        group: Option<String>,
        events: Vec<Event>,
        at: Position,
    }
    let mut by_author: BTreeMap<String, Acc> = BTreeMap::new();
    for (at, rec) in records {
        let event = rec.to_event(at)?;
        let group = rec.group();
        match by_author.entry(rec.author_id.clone()) {
            Entry::Vacant(v) => {
                v.insert(Acc {
                    group,
                    events: vec![event],
                    at,
                });
            }
            Entry::Occupied(mut o) => {
                let acc = o.get_mut();
                if acc.group != group {
                    return Err(IngestError::ConflictingGroup {
                        author_id: rec.author_id,
                        first: acc.group.clone().unwrap_or_default(),
                        second: group.unwrap_or_default(),
                        at,
                    });
                }
                acc.events.push(event);
            }
        }
    }
    by_author
        .into_iter()
        .map(|(author_id, mut acc)| {
            acc.events.sort_by(|a, b| {
                (a.kind(), a.journal(), a.year(), a.count()).cmp(&(b.kind(), b.journal(), b.year(), b.count()))
            });
            AuthorCorpus::new(author_id, acc.group, acc.events).map_err(invalid(acc.at))
        })
        .collect()
}

pub fn load_events(reader: impl Read, format: Format) -> Result<Vec<AuthorCorpus>, IngestError> {
    corpora_from_records(read_rows::<EventRecord>(reader, format)?)
}

pub(crate) fn records_of(corpus: &AuthorCorpus) -> impl Iterator<Item = EventRecord> + '_ {
    corpus.events().iter().map(move |e| EventRecord {
        author_id: corpus.author_id().to_string(),
        group: corpus.group().map(str::to_string),
        kind: e.kind().as_str().to_string(),
        journal: e.journal().to_string(),
        year: e.year(),
        count: e.count() as i64,
    })
}

pub fn write_events(writer: impl Write, corpora: &[AuthorCorpus], format: Format) -> Result<(), IngestError> {
    let rows: Vec<EventRecord> = corpora.iter().flat_map(records_of).collect();
    write_rows(writer, &EVENT_HEADER, &rows, format)
}

/// Supplied per-author totals. Not derived from events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarMetrics {
    pub papers: u64,
    pub cites: u64,
    pub h: u64,
}

impl ScalarMetrics {
    /// Checks `h <= papers`, and `h <= cites` when there is at least one paper.
    pub fn validate(&self) -> Result<(), (&'static str, u64)> {
        if self.h > self.papers {
            return Err(("papers", self.papers));
        }
        if self.papers > 0 && self.h > self.cites {
            return Err(("cites", self.cites));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScalarRow {
    author_id: String,
    papers: i64,
    cites: i64,
    h: i64,
}

pub fn load_scalars(reader: impl Read, format: Format) -> Result<BTreeMap<String, ScalarMetrics>, IngestError> {
    let rows: Vec<(Position, ScalarRow)> = read_rows(reader, format)?;
    let mut out = BTreeMap::new();
    let mut seen: HashMap<String, Position> = HashMap::new();
    for (at, row) in rows {
        if row.author_id.is_empty() {
            return Err(IngestError::Invalid {
                at,
                source: ModelError::EmptyAuthor,
            });
        }
        if let Some(&first) = seen.get(&row.author_id) {
            return Err(IngestError::DuplicateAuthor {
                author_id: row.author_id,
                first,
                second: at,
            });
        }
        seen.insert(row.author_id.clone(), at);
        let nonneg = |column: &'static str, value: i64| {
            u64::try_from(value).map_err(|_| IngestError::Negative { at, column, value })
        };
        let m = ScalarMetrics {
            papers: nonneg("papers", row.papers)?,
            cites: nonneg("cites", row.cites)?,
            h: nonneg("h", row.h)?,
        };
        if let Err((column, limit)) = m.validate() {
            return Err(IngestError::HIndexBound {
                at,
                author_id: row.author_id,
                h: m.h,
                column,
                limit,
            });
        }
        out.insert(row.author_id, m);
    }
    Ok(out)
}

pub fn write_scalars(
    writer: impl Write,
    scalars: &BTreeMap<String, ScalarMetrics>,
    format: Format,
) -> Result<(), IngestError> {
    let rows: Vec<ScalarRow> = scalars
        .iter()
        .map(|(id, m)| ScalarRow {
            author_id: id.clone(),
            papers: m.papers as i64,
            cites: m.cites as i64,
            h: m.h as i64,
        })
        .collect();
    write_rows(writer, &SCALAR_HEADER, &rows, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impact(s: &str) -> Result<ImpactTable, IngestError> {
        load_impact_table(s.as_bytes(), Format::Csv)
    }

    #[test]
    fn impact_row_becomes_entry() {
        let t = impact("journal,year,indicator,value\nPhysical Review Letters,2009,SJR,5.264\n").unwrap();
        let prl = JournalRef::new("Physical Review Letters").unwrap();
        assert_eq!(t.get(&prl, 2009, &IndicatorName::sjr()), Some(5.264));
    }

    #[test]
    fn header_only_is_empty_table() {
        assert!(impact("journal,year,indicator,value\n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_impact_names_both_lines() {
        let err = impact("journal,year,indicator,value\nA,2009,SJR,1\nB,2009,SJR,2\nA,2009,SJR,3\n").unwrap_err();
        match &err {
            IngestError::DuplicateImpact { first, second, .. } => {
                assert_eq!((*first, *second), (Position::Line(2), Position::Line(4)));
            }
            other => panic!("{other:?}"),
        }
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn negative_and_malformed_impact_rows() {
        let err = impact("journal,year,indicator,value\nA,2009,SJR,-1\n").unwrap_err();
        assert!(
            matches!(
                err,
                IngestError::Invalid {
                    at: Position::Line(2),
                    ..
                }
            ),
            "{err:?}"
        );
        let err = impact("journal,year,indicator,value\nA,2009,SJR,1\nA,twenty,SJR,1\n").unwrap_err();
        assert!(
            matches!(
                err,
                IngestError::Malformed {
                    at: Position::Line(3),
                    ..
                }
            ),
            "{err:?}"
        );
        let err = impact("journal,year,indicator,value\nA,2009,SJR\n").unwrap_err();
        assert!(matches!(err, IngestError::Malformed { .. }), "{err:?}");
    }

    #[test]
    fn event_rows_group_by_author() {
        let src = "author_id,group,kind,journal,year,count\n\
                   bocci,Phy,publication,Physical Review Letters,2009,25\n\
                   other,,Citation,J,2010,1\n\
                   bocci,Phy,PUBLICATION,J,2010,2\n\
                   bocci,Phy,publication,J,2010,3\n";
        let corpora = load_events(src.as_bytes(), Format::Csv).unwrap();
        assert_eq!(corpora.len(), 2);
        let b = &corpora[0];
        assert_eq!(b.author_id(), "bocci");
        assert_eq!(b.group(), Some("Phy"));
        let prl = JournalRef::new("Physical Review Letters").unwrap();
        let j = JournalRef::new("J").unwrap();
        let merged = b.merged_counts(EventKind::Publication);
        assert_eq!(merged[&(prl, 2009)], 25);
        assert_eq!(merged[&(j, 2010)], 5);
        assert_eq!(corpora[1].group(), None);
    }

    #[test]
    fn event_row_errors() {
        let head = "author_id,group,kind,journal,year,count\n";
        let load = |body: &str| load_events(format!("{head}{body}").as_bytes(), Format::Csv);
        assert!(matches!(
            load("a,G,publication,J,2009,0\n").unwrap_err(),
            IngestError::Invalid {
                source: ModelError::ZeroCount,
                ..
            }
        ));
        assert!(matches!(
            load("a,G,publication,J,2009,-2\n").unwrap_err(),
            IngestError::Negative { .. }
        ));
        assert!(matches!(
            load("a,G,preprint,J,2009,1\n").unwrap_err(),
            IngestError::Invalid {
                source: ModelError::UnknownKind(_),
                ..
            }
        ));
        assert!(matches!(
            load("a,G,publication,J,2009,1\na,H,citation,J,2009,1\n").unwrap_err(),
            IngestError::ConflictingGroup {
                at: Position::Line(3),
                ..
            }
        ));
        assert!(load("").unwrap().is_empty());
    }

    #[test]
    fn scalar_rows() {
        let load = |body: &str| load_scalars(format!("author_id,papers,cites,h\n{body}").as_bytes(), Format::Csv);
        let s = load("bocci,412,8780,42\nx,0,0,0\n").unwrap();
        assert_eq!(
            s["bocci"],
            ScalarMetrics {
                papers: 412,
                cites: 8780,
                h: 42
            }
        );
        assert_eq!(
            s["x"],
            ScalarMetrics {
                papers: 0,
                cites: 0,
                h: 0
            }
        );
        assert!(matches!(
            load("x,10,50,12\n").unwrap_err(),
            IngestError::HIndexBound { column: "papers", .. }
        ));
        assert!(matches!(
            load("x,10,3,4\n").unwrap_err(),
            IngestError::HIndexBound { column: "cites", .. }
        ));
        assert!(matches!(
            load("x,-1,3,0\n").unwrap_err(),
            IngestError::Negative { column: "papers", .. }
        ));
        assert!(matches!(
            load("x,1,1,1\nx,2,2,1\n").unwrap_err(),
            IngestError::DuplicateAuthor {
                first: Position::Line(2),
                second: Position::Line(3),
                ..
            }
        ));
    }

    #[test]
    fn json_mirrors_csv() {
        let json = r#"[{"journal":"A","year":2009,"indicator":"SJR","value":1.5},
                       {"journal":"A","year":2009,"indicator":"SJR","value":2.0}]"#;
        let err = load_impact_table(json.as_bytes(), Format::Json).unwrap_err();
        assert!(matches!(
            err,
            IngestError::DuplicateImpact {
                first: Position::Record(1),
                second: Position::Record(2),
                ..
            }
        ));
        let json = r#"[{"author_id":"a","group":null,"kind":"reference","journal":"J","year":2001,"count":4}]"#;
        let c = load_events(json.as_bytes(), Format::Json).unwrap();
        assert_eq!(c[0].events()[0].count(), 4);
        assert!(load_events(b"{".as_slice(), Format::Json).is_err());
    }

    #[test]
    fn writers_round_trip() {
        let src = "journal,year,indicator,value\nA,2009,SJR,0.1\nB,2010,SNIP,3.25\nA,2009,SNIP,1e-7\n";
        let t = impact(src).unwrap();
        for format in [Format::Csv, Format::Json] {
            let mut buf = Vec::new();
            write_impact_table(&mut buf, &t, format).unwrap();
            assert_eq!(load_impact_table(buf.as_slice(), format).unwrap(), t);
        }
        let mut buf = Vec::new();
        write_impact_table(&mut buf, &ImpactTable::new(), Format::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "journal,year,indicator,value\n");
    }
}
