//! Shared fixtures for the benchmarks.

use std::path::{Path, PathBuf};

use kaw_core::Scenario;

pub fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

/// Loads a bundled scenario by file name.
pub fn scenario(name: &str) -> Scenario {
    Scenario::load(&scenario_path(name)).expect("bundled scenario loads")
}
