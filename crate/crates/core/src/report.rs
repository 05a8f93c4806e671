//! Verification reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Passes when `value <= tolerance`.
    AtMost,
    /// Passes when `value >= tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Residual {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Residual { name: name.into(), value, tolerance, comparison: Comparison::AtMost, passed: value <= tolerance }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Residual { name: name.into(), value, tolerance, comparison: Comparison::AtLeast, passed: value >= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub chart: String,
    pub resolution: Vec<usize>,
    pub points: usize,
    pub exclusion: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub task: String,
    pub passed: bool,
    pub residuals: Vec<Residual>,
    pub grid: Option<GridMeta>,
    pub provenance: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(task: impl Into<String>) -> Self {
        VerificationReport {
            task: task.into(),
            passed: true,
            residuals: Vec::new(),
            grid: None,
            provenance: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, r: Residual) -> &mut Self {
        self.passed &= r.passed;
        self.residuals.push(r);
        self
    }

    pub fn with_grid(mut self, grid: GridMeta) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.provenance.insert(key.to_string(), v);
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    /// Marks the report failed without a numeric residual.
    pub fn fail(&mut self, why: impl Into<String>) -> &mut Self {
        self.passed = false;
        self.notes.push(why.into());
        self
    }

    /// Merges another report's residuals under a prefix.
    pub fn absorb(&mut self, prefix: &str, other: &VerificationReport) -> &mut Self {
        for r in &other.residuals {
            let mut r = r.clone();
            r.name = format!("{prefix}.{}", r.name);
            self.push(r);
        }
        for (k, v) in &other.provenance {
            self.provenance.insert(format!("{prefix}.{k}"), v.clone());
        }
        for n in &other.notes {
            self.notes.push(format!("{prefix}: {n}"));
        }
        self.passed &= other.passed;
        self
    }

    pub fn residual(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }
}
