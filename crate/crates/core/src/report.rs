//! Run reports, as a text table or a JSON document with stable field names.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::lp::StrictnessPolicy;
use crate::robust::GridVerdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Positive,
    NotPositive,
    Stable,
    Unstable,
    Reproduced,
    Mismatch,
}

impl Status {
    pub fn is_success(self) -> bool {
        matches!(self, Status::Optimal | Status::Positive | Status::Stable | Status::Reproduced)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSize {
    pub vars: usize,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub gamma: Option<f64>,
    pub epsilon: f64,
    pub lambda_floor: f64,
    pub witness_lambda: Vec<f64>,
    /// `"not refuted"`, `"refuted"` or `"not applicable"`.
    pub grid_verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp: Option<LpSize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservatism: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl Report {
    pub fn new(command: impl Into<String>, status: Status, policy: &StrictnessPolicy<f64>) -> Self {
        Report {
            command: command.into(),
            status,
            gamma: None,
            epsilon: policy.epsilon,
            lambda_floor: policy.lambda_floor,
            witness_lambda: Vec::new(),
            grid_verdict: "not applicable".into(),
            grid: None,
            oracle: None,
            lp: None,
            conservatism: None,
            messages: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn with_grid(mut self, grid: GridVerdict) -> Self {
        self.grid_verdict = grid.label().into();
        if self.status == Status::Optimal && !grid.passed() {
            self.messages.push(format!("grid check refuted the result: {}", grid.failure.clone().unwrap_or_default()));
        }
        self.grid = Some(grid);
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn to_structured(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}: {}", self.command, serde_json::to_value(self.status).unwrap().as_str().unwrap_or(""));
        if let Some(g) = self.gamma {
            let _ = writeln!(out, "  gamma          {g:.10}");
        }
        if let Some(o) = self.oracle {
            let _ = writeln!(out, "  oracle         {o:.10}");
        }
        let _ = writeln!(out, "  epsilon        {:e}", self.epsilon);
        let _ = writeln!(out, "  lambda floor   {:e}", self.lambda_floor);
        if !self.witness_lambda.is_empty() {
            let _ = writeln!(out, "  lambda         {:?}", self.witness_lambda);
        }
        if let Some(lp) = &self.lp {
            let _ = writeln!(out, "  lp size        {} vars, {} rows", lp.vars, lp.rows);
        }
        let _ = writeln!(out, "  grid check     {}", self.grid_verdict);
        if let Some(g) = self.grid.as_ref().and_then(|g| g.worst_gain) {
            let _ = writeln!(out, "  worst on grid  {g:.10}");
        }
        for (k, v) in &self.details {
            match v {
                Value::String(s) => {
                    let _ = writeln!(out, "  {k}:\n{s}");
                }
                _ => {
                    let _ = writeln!(out, "  {k:<14} {v}");
                }
            }
        }
        if let Some(c) = &self.conservatism {
            let _ = writeln!(out, "  note           {c}");
        }
        for m in &self.messages {
            let _ = writeln!(out, "  ! {m}");
        }
        out
    }
}
