//! The JSON manifest written next to every run's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Deterministic by construction: keys are sorted and nothing depends on
/// the clock or the output location, so identical invocations produce
/// identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub params: Value,
    pub seed: u64,
    pub seed_rule: &'static str,
    pub outputs: Vec<String>,
    pub summary: BTreeMap<String, Value>,
    pub assertions: Vec<Assertion>,
}

impl RunManifest {
    pub fn new(command: &'static str, params: Value, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            params,
            seed,
            seed_rule: randlab_core::seed::SPLIT_RULE,
            outputs: Vec::new(),
            summary: BTreeMap::new(),
            assertions: Vec::new(),
        }
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_owned());
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("summary values are plain data");
        self.summary.insert(key.to_owned(), value);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion {
            name: name.to_owned(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
