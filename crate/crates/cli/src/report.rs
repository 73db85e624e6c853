//! JSON reports: one object per run with a flat list of checks.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub scenario: String,
    pub passes: bool,
    pub checks: Vec<Check>,
    /// Command-specific data.
    pub details: Value,
}

impl Report {
    pub fn new(
        command: &'static str,
        scenario: String,
        checks: Vec<Check>,
        details: Value,
    ) -> Self {
        Report {
            command,
            scenario,
            passes: checks.iter().all(|c| c.pass),
            checks,
            details,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}
