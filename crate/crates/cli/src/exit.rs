//! Process exit codes and the error types that select them.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | other failure (e.g. writing output) |
//! | 2 | usage error: bad flag, config or policy value |
//! | 3 | input error: unreadable or malformed input file |
//! | 4 | an impact value is missing under the strict policy |
//! | 5 | other engine failure |
//! | 6 | no authors in the input |
//! | 7 | report or statistics error (unknown variable, too few groups, ...) |
//! | 8 | dataset validation failed (`--strict-validation`) |

use std::path::PathBuf;

use citepot::engine::EngineError;
use citepot::ingest::IngestError;
use citepot::report::ReportError;
use citepot::stats::StatsError;

pub const SUCCESS: i32 = 0;
pub const FAILURE: i32 = 1;
pub const USAGE: i32 = 2;
pub const INPUT: i32 = 3;
pub const MISSING_IMPACT: i32 = 4;
pub const ENGINE: i32 = 5;
pub const NO_AUTHORS: i32 = 6;
pub const REPORT: i32 = 7;
pub const VALIDATION: i32 = 8;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, thiserror::Error)]
#[error("input file {} does not exist", .0.display())]
pub struct MissingInput(pub PathBuf);

#[derive(Debug, thiserror::Error)]
#[error("no authors in the input")]
pub struct NoAuthors;

/// Some authors failed and were left out of the written output.
#[derive(Debug, thiserror::Error)]
#[error("{count} author(s) failed; first: {first}")]
pub struct PartialFailure {
    pub count: usize,
    pub first: EngineError,
}

fn engine_code(e: &EngineError) -> i32 {
    match e {
        EngineError::MissingImpact { .. } => MISSING_IMPACT,
        EngineError::Author { source, .. } => engine_code(source),
        EngineError::InvalidPolicy(_) => USAGE,
        _ => ENGINE,
    }
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if cause.is::<MissingInput>() {
            return INPUT;
        }
        if cause.is::<NoAuthors>() {
            return NO_AUTHORS;
        }
        if let Some(p) = cause.downcast_ref::<PartialFailure>() {
            return engine_code(&p.first);
        }
        if let Some(e) = cause.downcast_ref::<EngineError>() {
            return engine_code(e);
        }
        if let Some(e) = cause.downcast_ref::<IngestError>() {
            return match e {
                IngestError::Validation(_) => VALIDATION,
                _ => INPUT,
            };
        }
        if cause.is::<ReportError>() || cause.is::<StatsError>() {
            return REPORT;
        }
    }
    FAILURE
}
