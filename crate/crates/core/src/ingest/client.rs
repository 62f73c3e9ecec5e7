use std::collections::BTreeMap;
use std::io::Read;
use std::thread;
use std::time::Duration;

use super::tables::{corpora_from_records, EventRecord};
use super::{read_rows, Format, IngestError, Position};
use crate::model::{AuthorCorpus, EventKind, YearWindow};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("author not found")]
    NotFound,
    /// Retryable.
    #[error("transport failure: {0}")]
    Transport(String),
}

/// A source of raw event records for one author at a time.
///
/// Implementations must tolerate concurrent fetches of distinct authors.
pub trait BibliographicClient: Send + Sync {
    fn fetch(&self, author_id: &str) -> Result<Vec<EventRecord>, ClientError>;
}

/// Replays recorded rows. Deterministic: the same id always yields the same
/// records in the same order.
#[derive(Debug, Clone, Default)]
pub struct FixtureClient {
    records: BTreeMap<String, Vec<EventRecord>>,
}

impl FixtureClient {
    pub fn from_records(records: impl IntoIterator<Item = EventRecord>) -> Self {
        let mut out: BTreeMap<String, Vec<EventRecord>> = BTreeMap::new();
        for r in records {
            out.entry(r.author_id.clone()).or_default().push(r);
        }
        Self { records: out }
    }

    /// Loads recorded rows in the events-file layout.
    pub fn from_events(reader: impl Read, format: Format) -> Result<Self, IngestError> {
        let rows: Vec<(Position, EventRecord)> = read_rows(reader, format)?;
        Ok(Self::from_records(rows.into_iter().map(|(_, r)| r)))
    }

    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }
}

impl BibliographicClient for FixtureClient {
    fn fetch(&self, author_id: &str) -> Result<Vec<EventRecord>, ClientError> {
        self.records.get(author_id).cloned().ok_or(ClientError::NotFound)
    }
}

/// Bounded retries with exponential backoff for transport failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts including the first; at least 1 is always made.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: f64,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(100),
            multiplier: 2.0,
            max_backoff: Duration::from_secs(2),
        }
    }
}

impl RetryPolicy {
    pub fn no_retry() -> Self {
        Self {
            max_attempts: 1,
            ..Self::default()
        }
    }

    /// Pause after failed attempt `attempt` (1-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.powi(attempt.saturating_sub(1) as i32);
        self.initial_backoff.mul_f64(factor).min(self.max_backoff)
    }
}

/// Fetches one author's records and turns them into a corpus the way
/// [`load_events`](super::load_events) would. Publications outside `window`
/// are left out; citation and reference records are kept whatever their
/// year.
pub fn fetch_author_records(
    client: &dyn BibliographicClient,
    author_id: &str,
    window: YearWindow,
    retry: &RetryPolicy,
) -> Result<AuthorCorpus, IngestError> {
    let mut attempt = 0;
    let records = loop {
        attempt += 1;
        match client.fetch(author_id) {
            Ok(r) => break r,
            Err(ClientError::NotFound) => return Err(IngestError::UnknownAuthor(author_id.to_string())),
            Err(ClientError::Transport(message)) => {
                if attempt >= retry.max_attempts.max(1) {
                    return Err(IngestError::Transport {
                        author_id: author_id.to_string(),
                        attempts: attempt,
                        message,
                    });
                }
                let pause = retry.backoff(attempt);
                log::warn!("fetch `{author_id}` failed ({message}); retrying in {pause:?}");
                thread::sleep(pause);
            }
        }
    };

    let group = records.first().and_then(|r| r.group.clone()).filter(|g| !g.is_empty());
    let kept = records
        .into_iter()
        .enumerate()
        .filter(|(_, r)| r.author_id == author_id)
        .filter(|(_, r)| !matches!(r.kind.parse(), Ok(EventKind::Publication)) || window.contains(r.year))
        .map(|(i, r)| (Position::Record(i as u64 + 1), r));
    let mut corpora = corpora_from_records(kept)?;
    match corpora.pop() {
        Some(c) => Ok(c),
        None => AuthorCorpus::new(author_id, group, Vec::new()).map_err(|source| IngestError::Invalid {
            at: Position::Record(0),
            source,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn rec(kind: &str, year: i32, count: i64) -> EventRecord {
        EventRecord {
            author_id: "a".into(),
            group: Some("G".into()),
            kind: kind.into(),
            journal: "J".into(),
            year,
            count,
        }
    }

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
    }

    impl BibliographicClient for Flaky {
        fn fetch(&self, _: &str) -> Result<Vec<EventRecord>, ClientError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(ClientError::Transport("timeout".into()))
            } else {
                Ok(vec![rec("publication", 2010, 1)])
            }
        }
    }

    fn quick(max_attempts: u32) -> RetryPolicy {
        RetryPolicy {
            max_attempts,
            initial_backoff: Duration::from_millis(1),
            ..RetryPolicy::default()
        }
    }

    #[test]
    fn unknown_author_is_not_found() {
        let c = FixtureClient::from_records([rec("publication", 2010, 1)]);
        let err = fetch_author_records(&c, "zz", YearWindow::default(), &quick(3)).unwrap_err();
        assert!(matches!(err, IngestError::UnknownAuthor(id) if id == "zz"));
    }

    #[test]
    fn publications_outside_window_dropped() {
        let c = FixtureClient::from_records([
            rec("publication", 2010, 2),
            rec("publication", 2001, 5),
            rec("reference", 2001, 7),
        ]);
        let corpus = fetch_author_records(&c, "a", YearWindow::default(), &quick(1)).unwrap();
        assert_eq!(
            corpus.events_of(EventKind::Publication).map(|e| e.count()).sum::<u64>(),
            2
        );
        assert_eq!(corpus.events_of(EventKind::Reference).count(), 1);
        assert_eq!(corpus.group(), Some("G"));
    }

    #[test]
    fn transient_failures_are_retried() {
        let flaky = Flaky {
            failures: 2,
            calls: AtomicU32::new(0),
        };
        assert!(fetch_author_records(&flaky, "a", YearWindow::default(), &quick(3)).is_ok());
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 3);

        let flaky = Flaky {
            failures: 5,
            calls: AtomicU32::new(0),
        };
        let err = fetch_author_records(&flaky, "a", YearWindow::default(), &quick(2)).unwrap_err();
        assert!(matches!(err, IngestError::Transport { attempts: 2, .. }));
    }

    #[test]
    fn backoff_grows_and_caps() {
        let p = RetryPolicy::default();
        assert_eq!(p.backoff(1), Duration::from_millis(100));
        assert_eq!(p.backoff(2), Duration::from_millis(200));
        assert_eq!(p.backoff(10), Duration::from_secs(2));
    }
}
