//! The JSON report.
//!
//! All maps are ordered, so two runs with the same inputs serialize to the
//! same bytes except for `wall_time_seconds`. Non-finite numbers are never
//! stored: [`Report::residual`] drops them and records a note instead.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    /// The effective configuration, after command-line overrides.
    pub config: serde_json::Value,
    /// `[d₊, d₋]` pairs.
    pub indices: BTreeMap<String, [usize; 2]>,
    pub residuals: BTreeMap<String, f64>,
    /// Thresholds the checks compare against, beyond the configured tolerances.
    pub bounds: BTreeMap<String, f64>,
    pub angles: BTreeMap<String, Vec<f64>>,
    pub dimensions: BTreeMap<String, usize>,
    pub labels: BTreeMap<String, String>,
    pub checks: BTreeMap<String, bool>,
    pub files: BTreeMap<String, String>,
    pub notes: Vec<String>,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            ..Self::default()
        }
    }

    pub fn indices(&mut self, key: impl Into<String>, d: (usize, usize)) {
        self.indices.insert(key.into(), [d.0, d.1]);
    }

    pub fn residual(&mut self, key: impl Into<String>, value: f64) {
        let key = key.into();
        if value.is_finite() {
            self.residuals.insert(key, value);
        } else {
            self.notes.push(format!("{key} is not finite ({value}); omitted"));
        }
    }

    pub fn bound(&mut self, key: impl Into<String>, value: f64) {
        self.bounds.insert(key.into(), value);
    }

    pub fn angles(&mut self, key: impl Into<String>, values: Vec<f64>) {
        self.angles.insert(key.into(), values);
    }

    pub fn dimension(&mut self, key: impl Into<String>, value: usize) {
        self.dimensions.insert(key.into(), value);
    }

    pub fn label(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.labels.insert(key.into(), value.into());
    }

    pub fn check(&mut self, key: impl Into<String>, value: bool) {
        self.checks.insert(key.into(), value);
    }

    pub fn file(&mut self, key: impl Into<String>, path: impl Into<String>) {
        self.files.insert(key.into(), path.into());
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, &v)| !v)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let mut out = format!("{}\n", self.command);
        for (k, [p, m]) in &self.indices {
            let _ = writeln!(out, "  {k}: ({p}, {m})");
        }
        for (k, v) in &self.dimensions {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for (k, v) in &self.residuals {
            let _ = writeln!(out, "  {k} = {v:.3e}");
        }
        for (k, v) in &self.angles {
            let max = v.iter().copied().fold(0.0, f64::max);
            let _ = writeln!(out, "  {k}: {} angles, max {max:.3e}", v.len());
        }
        for (k, v) in &self.labels {
            let _ = writeln!(out, "  {k}: {v}");
        }
        for (k, v) in &self.checks {
            let _ = writeln!(out, "  [{}] {k}", if *v { "ok" } else { "FAIL" });
        }
        for (k, v) in &self.files {
            let _ = writeln!(out, "  wrote {k}: {v}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}
