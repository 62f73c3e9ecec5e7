//! Bundled reference data.
//!
//! `profiles.csv` holds the 120-author reference dataset as precomputed
//! profiles. The `bocci_*` files carry raw events for the one author whose
//! record is available in detail; see `fixtures/README.md` for which rows
//! are synthetic.

use std::collections::BTreeMap;

use crate::ingest::{
    load_events, load_impact_table, load_scalars, read_profiles, FixtureClient, Format, ProfileTable, ScalarMetrics,
};
use crate::model::{AuthorCorpus, ImpactTable};

pub const PROFILES_CSV: &str = include_str!("../fixtures/profiles.csv");
pub const BOCCI_EVENTS_CSV: &str = include_str!("../fixtures/bocci_events.csv");
pub const BOCCI_SCALARS_CSV: &str = include_str!("../fixtures/bocci_scalars.csv");
pub const IMPACT_TABLE_CSV: &str = include_str!("../fixtures/impact_table.csv");

/// Author id of the detailed record in the event fixtures.
pub const BOCCI_ID: &str = "bocci";
/// Display id of the same author in the profiles fixture.
pub const BOCCI_DISPLAY_ID: &str = "Bocci, A.";

// The bundled files are tested to parse, so these cannot fail.

pub fn profiles() -> ProfileTable {
    read_profiles(PROFILES_CSV.as_bytes(), Format::Csv).expect("bundled profiles parse")
}

pub fn impact_table() -> ImpactTable {
    load_impact_table(IMPACT_TABLE_CSV.as_bytes(), Format::Csv).expect("bundled impact table parses")
}

pub fn bocci_corpora() -> Vec<AuthorCorpus> {
    load_events(BOCCI_EVENTS_CSV.as_bytes(), Format::Csv).expect("bundled events parse")
}

pub fn bocci_scalars() -> BTreeMap<String, ScalarMetrics> {
    load_scalars(BOCCI_SCALARS_CSV.as_bytes(), Format::Csv).expect("bundled scalars parse")
}

/// A client replaying the bundled event records.
pub fn client() -> FixtureClient {
    FixtureClient::from_events(BOCCI_EVENTS_CSV.as_bytes(), Format::Csv).expect("bundled events parse")
}
