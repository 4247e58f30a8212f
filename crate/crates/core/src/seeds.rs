//! Embedded seed data: anomaly model definitions and the scenario catalog.
//!
//! The same documents ship as editable files under `data/`; embedding them
//! keeps the library and CLI usable without a working directory.

use crate::anomaly::{parse_model, AnomalyModel};
use crate::simulate::{load_catalog, Scenario};

/// Seed model definition documents, keyed by file name.
pub const MODEL_FILES: [(&str, &str); 6] = [
    (
        "log_file_sync.json",
        include_str!("../data/models/log_file_sync.json"),
    ),
    (
        "redo_allocation.json",
        include_str!("../data/models/redo_allocation.json"),
    ),
    (
        "hot_block_contention.json",
        include_str!("../data/models/hot_block_contention.json"),
    ),
    (
        "logical_read_surge.json",
        include_str!("../data/models/logical_read_surge.json"),
    ),
    (
        "cpu_spike.json",
        include_str!("../data/models/cpu_spike.json"),
    ),
    (
        "dirty_page_writes.json",
        include_str!("../data/models/dirty_page_writes.json"),
    ),
];

/// Embedded scenario catalog document.
pub const SCENARIO_CATALOG: &str = include_str!("../data/scenarios.json");

/// Parse every seed model.
pub fn seed_models() -> Vec<AnomalyModel> {
    MODEL_FILES
        .iter()
        .map(|(name, text)| {
            parse_model(text).unwrap_or_else(|e| panic!("seed model {name} invalid: {e}"))
        })
        .collect()
}

/// Parse the seed scenario catalog.
pub fn seed_scenarios() -> Vec<Scenario> {
    load_catalog(SCENARIO_CATALOG).expect("seed catalog valid")
}
