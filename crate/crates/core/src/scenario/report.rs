//! Check reports and their serializations.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

/// Outcome of one check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    PreconditionError,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::PreconditionError => "precondition-error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub kind: String,
    pub status: Status,
    /// Absent for precondition errors.
    pub residual: Option<f64>,
    pub message: Option<String>,
    pub detail: Option<Value>,
    /// Wall time in seconds, recorded only on request.
    pub runtime: Option<f64>,
}

/// `fail` counts every entry that did not pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Metadata {
    pub scenario: String,
    pub toolkit_version: String,
    pub input_digest: String,
    pub seed: u64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<CheckRecord>,
    meta: Option<Metadata>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl Report {
    pub fn new(checks: Vec<CheckRecord>) -> Self {
        Self { checks, meta: None }
    }

    pub(crate) fn with_metadata(mut self, meta: Metadata) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn summary(&self) -> Summary {
        let pass = self.checks.iter().filter(|c| c.status == Status::Pass).count();
        Summary {
            pass,
            fail: self.checks.len() - pass,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary().fail == 0
    }

    pub fn max_residual(&self) -> Option<f64> {
        self.checks.iter().filter_map(|c| c.residual).reduce(f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn input_digest(&self) -> Option<&str> {
        self.meta.as_ref().map(|m| m.input_digest.as_str())
    }

    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                let mut o = Map::new();
                o.insert("name".into(), json!(c.name));
                o.insert("kind".into(), json!(c.kind));
                o.insert("status".into(), json!(c.status.as_str()));
                o.insert("residual".into(), c.residual.map_or(Value::Null, |r| json!(r)));
                if let Some(m) = &c.message {
                    o.insert("message".into(), json!(m));
                }
                if let Some(d) = &c.detail {
                    o.insert("detail".into(), d.clone());
                }
                if let Some(t) = c.runtime {
                    o.insert("runtime".into(), json!(t));
                }
                Value::Object(o)
            })
            .collect();
        let s = self.summary();
        let mut out = Map::new();
        out.insert("checks".into(), Value::Array(checks));
        out.insert("summary".into(), json!({ "pass": s.pass, "fail": s.fail }));
        if let Some(m) = &self.meta {
            out.insert("scenario".into(), json!(m.scenario));
            out.insert("toolkit_version".into(), json!(m.toolkit_version));
            out.insert("input_digest".into(), json!(m.input_digest));
            out.insert("seed".into(), json!(m.seed));
            out.insert("tolerance".into(), json!(m.tolerance));
        }
        Value::Object(out)
    }

    /// Canonical JSON (sorted keys, shortest round-trip floats) or a table.
    pub fn emit(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Json => serde_json::to_vec(&self.to_json()).expect("JSON values serialize"),
            Format::Text => self.to_text().into_bytes(),
        }
    }

    fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(m) = &self.meta {
            let _ = writeln!(out, "scenario {:?} (seed {}, tol {:e})", m.scenario, m.seed, m.tolerance);
        }
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
        for c in &self.checks {
            let residual = c.residual.map_or("-".to_string(), |r| format!("{r:.3e}"));
            let _ = write!(out, "{:<width$}  {:<28}  {:<18}  {:>10}", c.name, c.kind, c.status.as_str(), residual);
            if let Some(t) = c.runtime {
                let _ = write!(out, "  {:.3}ms", t * 1e3);
            }
            if let Some(msg) = &c.message {
                let _ = write!(out, "  {msg}");
            }
            out.push('\n');
        }
        let s = self.summary();
        let _ = writeln!(out, "{} passed, {} failed", s.pass, s.fail);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_minimal() {
        let bytes = Report::default().emit(Format::Json);
        assert_eq!(String::from_utf8(bytes).unwrap(), r#"{"checks":[],"summary":{"fail":0,"pass":0}}"#);
    }

    #[test]
    fn single_pass() {
        let r = Report::new(vec![CheckRecord {
            name: "a".into(),
            kind: "unitality".into(),
            status: Status::Pass,
            residual: Some(0.0),
            message: None,
            detail: None,
            runtime: None,
        }]);
        let v = r.to_json();
        assert_eq!(v["checks"].as_array().unwrap().len(), 1);
        assert_eq!(v["checks"][0]["status"], "pass");
        assert_eq!(v["summary"]["pass"], 1);
    }
}
