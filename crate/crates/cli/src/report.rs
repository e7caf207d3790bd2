use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use bubble_core::RadialField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Relation {
    AtMost { bound: f64 },
    AtLeast { bound: f64 },
    Above { bound: f64 },
    Near { target: f64, tolerance: f64 },
}

impl Relation {
    fn holds(&self, x: f64) -> bool {
        match *self {
            Self::AtMost { bound } => x <= bound,
            Self::AtLeast { bound } => x >= bound,
            Self::Above { bound } => x > bound,
            Self::Near { target, tolerance } => (x - target).abs() <= tolerance,
        }
    }
}

/// One asserted comparison. Non-finite measurements always fail.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Key in the report's tolerance table that set the bound; `None` for
    /// structural bounds such as `v <= 1`.
    pub tolerance_key: Option<String>,
    pub measured: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, tolerance_key: &str, measured: f64, relation: Relation) -> Self {
        Self::build(name, Some(tolerance_key), measured, relation)
    }

    pub fn fixed(name: &str, measured: f64, relation: Relation) -> Self {
        Self::build(name, None, measured, relation)
    }

    fn build(name: &str, tolerance_key: Option<&str>, measured: f64, relation: Relation) -> Self {
        Self {
            name: name.to_string(),
            tolerance_key: tolerance_key.map(str::to_string),
            measured,
            relation,
            passed: measured.is_finite() && relation.holds(measured),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub eps: f64,
    pub deviation: f64,
    pub hyp_product: f64,
    pub a_decay_slope: f64,
}

/// What an experiment hands back before files are written.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub results: BTreeMap<String, Value>,
    pub curves: Vec<(String, RadialField)>,
    pub rates: Option<Vec<RateRow>>,
}

impl Outcome {
    pub fn result<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).expect("results are plain data");
        self.results.insert(key.to_string(), v);
    }

    pub fn curve(&mut self, name: &str, field: RadialField) {
        self.curves.push((name.to_string(), field));
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub config_hash: String,
    pub config: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub results: BTreeMap<String, Value>,
    pub passed: bool,
}

impl Report {
    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}
