//! Author citation potential: production, impact and reference dimensions
//! of an author computed from journal impact tables, plus the grouped
//! statistics and reports built on them.
//!
//! Layering, bottom up: [`model`] (types, no I/O), [`engine`] (weighted
//! impact means), [`stats`], [`ingest`] (files and clients), [`report`].

pub mod engine;
pub mod fixtures;
pub mod ingest;
pub mod model;
pub mod report;
pub mod stats;
