//! Access to the shipped parameter files.

use std::path::PathBuf;

use fluxcoh_core::qubit::{FluxoniumParams, PublishedMetrics, QubitFile};

pub const DEVICE_LABELS: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];
pub const S_SERIES_LABELS: [&str; 6] = ["S_A", "S_B", "S_C", "S_D", "S_E", "S_F"];

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn qubit_file(label: &str) -> QubitFile {
    QubitFile::load(fixtures_dir().join("qubits").join(format!("{label}.toml"))).unwrap()
}

pub fn qubit(label: &str) -> FluxoniumParams {
    qubit_file(label).params().unwrap()
}

pub fn published(label: &str) -> PublishedMetrics {
    qubit_file(label).published.unwrap()
}
