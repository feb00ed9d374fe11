//! Run manifest: config echo, versions, seed, results and one entry per assertion.

use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "holds")]
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub relation: Relation,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
}

/// Reported but never fails the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flag {
    pub name: String,
    pub raised: bool,
    pub note: String,
}

/// Ordered assertions with unique names.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Assertions(Vec<Assertion>);

impl Assertions {
    fn push(&mut self, a: Assertion) {
        assert!(
            self.0.iter().all(|x| x.name != a.name),
            "assertion {} recorded twice",
            a.name
        );
        self.0.push(a);
    }

    /// `value ≤ bound`; NaN fails.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(Assertion {
            name: name.into(),
            passed: value <= bound,
            relation: Relation::AtMost,
            value: Some(value),
            tolerance: Some(bound),
        });
    }

    /// `value ≥ bound`; NaN fails.
    pub fn at_least(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(Assertion {
            name: name.into(),
            passed: value >= bound,
            relation: Relation::AtLeast,
            value: Some(value),
            tolerance: Some(bound),
        });
    }

    pub fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.push(Assertion {
            name: name.into(),
            passed: ok,
            relation: Relation::Holds,
            value: None,
            tolerance: None,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.0.iter().all(|a| a.passed)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Assertion> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Assertion> {
        self.0.iter().find(|a| a.name == name)
    }
}

/// Written as `manifest.json`. Wall time lives in `timing.json` so that this
/// file is reproducible bit for bit.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub config: ExperimentConfig,
    pub results: serde_json::Value,
    pub assertions: Assertions,
    pub flags: Vec<Flag>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub passed: bool,
}

impl Manifest {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
