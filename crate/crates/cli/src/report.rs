use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentKind;
use crate::experiments::Outcome;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct Report<'a> {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub manifold: &'a str,
    pub config: &'a Value,
    pub passed: bool,
    pub notes: &'a [String],
    pub result: &'a Value,
}

impl<'a> Report<'a> {
    pub fn new(experiment: ExperimentKind, manifold: &'a str, outcome: &'a Outcome) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            manifold,
            config: &outcome.config,
            passed: outcome.passed,
            notes: &outcome.notes,
            result: &outcome.result,
        }
    }

    /// Pretty JSON with sorted object keys and no run-dependent fields.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing report {}", path.display()))
    }
}
