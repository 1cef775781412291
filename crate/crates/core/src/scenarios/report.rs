//! Machine-readable check reports.

use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// A figure quoted for the construction being reproduced.
    Reported,
    /// Computed independently (direct construction or eigenvalue oracle).
    Derived,
    /// Holds by construction.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|expected - actual| <= tolerance`.
    Approx,
    /// `actual > expected`.
    Greater,
    /// `actual < expected`.
    Less,
    /// Exact equality of booleans, integers or strings.
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub expected: Value,
    pub actual: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub origin: Origin,
}

/// Born distribution seen at one measurement and the outcome taken.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub event: String,
    pub probabilities: Vec<f64>,
    pub outcome: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    /// Excluded from JSON so that reports are byte-identical across runs.
    #[serde(skip)]
    pub wall_time_ms: f64,
    #[serde(skip)]
    pub observations: Vec<Observation>,
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

impl ScenarioReport {
    pub fn new(scenario: &str, seed: u64) -> Self {
        ScenarioReport {
            scenario: scenario.to_string(),
            seed,
            parameters: BTreeMap::new(),
            checks: Vec::new(),
            wall_time_ms: 0.0,
            observations: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.parameters.insert(key.to_string(), v);
    }

    pub fn approx(&mut self, name: &str, expected: f64, actual: f64, tolerance: f64, origin: Origin) -> bool {
        let pass = actual.is_finite() && (expected - actual).abs() <= tolerance;
        self.push(name, Relation::Approx, num(expected), num(actual), Some(tolerance), pass, origin)
    }

    pub fn greater(&mut self, name: &str, bound: f64, actual: f64, origin: Origin) -> bool {
        self.push(name, Relation::Greater, num(bound), num(actual), None, actual > bound, origin)
    }

    pub fn less(&mut self, name: &str, bound: f64, actual: f64, origin: Origin) -> bool {
        self.push(name, Relation::Less, num(bound), num(actual), None, actual < bound, origin)
    }

    pub fn equal<T: Serialize + PartialEq>(&mut self, name: &str, expected: T, actual: T, origin: Origin) -> bool {
        let pass = expected == actual;
        let e = serde_json::to_value(&expected).unwrap_or(Value::Null);
        let a = serde_json::to_value(&actual).unwrap_or(Value::Null);
        self.push(name, Relation::Equal, e, a, None, pass, origin)
    }

    /// Records a sub-protocol error as a failed check.
    pub fn error(&mut self, name: &str, err: &crate::Error) {
        self.push(
            name,
            Relation::Equal,
            Value::String("ok".into()),
            Value::String(err.to_string()),
            None,
            false,
            Origin::Exact,
        );
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        name: &str,
        relation: Relation,
        expected: Value,
        actual: Value,
        tolerance: Option<f64>,
        pass: bool,
        origin: Origin,
    ) -> bool {
        self.checks.push(Check {
            name: name.to_string(),
            relation,
            expected,
            actual,
            tolerance,
            pass,
            origin,
        });
        pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
