//! Structured pass/fail records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// The hypothesis of the checked statement does not hold for the input.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub unit: String,
}

/// One check: what was measured, against which tolerance, and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub anchor: String,
    pub values: BTreeMap<String, Measured>,
    pub tol: f64,
    pub pass: bool,
    pub status: Status,
    pub config: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Report>,
}

impl Report {
    pub fn new(check: impl Into<String>, anchor: impl Into<String>, tol: f64) -> Self {
        Report {
            check: check.into(),
            anchor: anchor.into(),
            values: BTreeMap::new(),
            tol,
            pass: false,
            status: Status::Fail,
            config: BTreeMap::new(),
            notes: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn value(mut self, name: &str, value: f64, unit: &str) -> Self {
        self.set(name, value, unit);
        self
    }

    pub fn set(&mut self, name: &str, value: f64, unit: &str) {
        self.values.insert(
            name.to_string(),
            Measured {
                value,
                unit: unit.to_string(),
            },
        );
    }

    pub fn config(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.config.insert(key.to_string(), value.into());
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn child(mut self, child: Report) -> Self {
        self.children.push(child);
        self
    }

    pub fn finish(mut self, pass: bool) -> Self {
        self.pass = pass;
        self.status = if pass { Status::Pass } else { Status::Fail };
        self
    }

    pub fn skipped(mut self, reason: impl Into<String>) -> Self {
        self.status = Status::Skipped;
        self.pass = false;
        self.notes.push(reason.into());
        self
    }

    /// Passes iff every non-skipped child passes (and at least one ran).
    pub fn from_children(self) -> Self {
        let ran: Vec<_> = self.children.iter().filter(|c| c.status != Status::Skipped).collect();
        let pass = !ran.is_empty() && ran.iter().all(|c| c.pass);
        self.finish(pass)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).map(|m| m.value)
    }

    pub fn is_skipped(&self) -> bool {
        self.status == Status::Skipped
    }

    /// Depth-first list of `(path, status)` pairs.
    pub fn flatten(&self) -> Vec<(String, Status)> {
        let mut out = vec![(self.check.clone(), self.status)];
        for c in &self.children {
            for (path, s) in c.flatten() {
                out.push((format!("{}/{}", self.check, path), s));
            }
        }
        out
    }
}
