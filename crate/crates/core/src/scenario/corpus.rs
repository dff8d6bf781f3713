//! Scenario files bundled with the crate, each carrying its expected outcome
//! under the top-level `expect` key.
//!
//! `expect` is `"pass"`, `{"outcome": "fail", "failing": {name: residual}}`
//! (a `null` residual only requires the check to fail) or
//! `{"outcome": "load_error", "contains": text}`.

use std::collections::BTreeMap;

use serde_json::Value;

use super::{LoadError, Report, RunOptions, Scenario, Status};

pub struct CorpusEntry {
    pub file: &'static str,
    pub text: &'static str,
}

macro_rules! corpus {
    ($($file:literal),* $(,)?) => {
        &[$(CorpusEntry { file: $file, text: include_str!(concat!("../../corpus/", $file)) }),*]
    };
}

pub static CORPUS: &[CorpusEntry] = corpus![
    "z2_flip.json",
    "d4_toy_poincare.json",
    "z2_localizability.json",
    "channels_measure.json",
    "integral_theorem.json",
    "bundle_trivial_z2.json",
    "bundle_twisted_z2.json",
    "local_algebra.json",
    "pde_lift.json",
    "geometry_s3.json",
    "geometry_paths.json",
    "broken_covariance.json",
    "broken_normalization.json",
];

/// Residuals of expected failures must match within this.
pub const RESIDUAL_MATCH: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Expectation {
    Pass,
    Fail(BTreeMap<String, Option<f64>>),
    LoadError(String),
}

impl Expectation {
    pub fn parse(v: Option<&Value>) -> Result<Self, String> {
        match v {
            None => Ok(Self::Pass),
            Some(Value::String(s)) if s == "pass" => Ok(Self::Pass),
            Some(Value::Object(o)) => match o.get("outcome").and_then(Value::as_str) {
                Some("pass") => Ok(Self::Pass),
                Some("fail") => {
                    let failing = o
                        .get("failing")
                        .and_then(Value::as_object)
                        .ok_or("fail expectation needs a `failing` object")?;
                    Ok(Self::Fail(failing.iter().map(|(k, v)| (k.clone(), v.as_f64())).collect()))
                }
                Some("load_error") => Ok(Self::LoadError(
                    o.get("contains").and_then(Value::as_str).unwrap_or_default().to_string(),
                )),
                _ => Err("unknown expectation outcome".into()),
            },
            Some(_) => Err("malformed expectation".into()),
        }
    }
}

#[derive(Debug)]
pub struct CorpusResult {
    pub file: &'static str,
    pub outcome: Result<Report, LoadError>,
    pub expectation: Result<Expectation, String>,
    /// Whether the outcome is the expected one.
    pub met: bool,
    pub note: String,
}

/// Compares an outcome with an expectation; the note explains a mismatch.
pub fn meets(outcome: &Result<Report, LoadError>, expected: &Expectation) -> (bool, String) {
    match (expected, outcome) {
        (Expectation::Pass, Ok(r)) if r.all_pass() => (true, String::new()),
        (Expectation::Pass, Ok(r)) => {
            let bad: Vec<&str> = r.checks.iter().filter(|c| c.status != Status::Pass).map(|c| c.name.as_str()).collect();
            (false, format!("unexpected failures: {}", bad.join(", ")))
        }
        (Expectation::Fail(failing), Ok(r)) => {
            for c in &r.checks {
                let should_fail = failing.contains_key(&c.name);
                if should_fail != (c.status != Status::Pass) {
                    return (false, format!("check {} has status {}", c.name, c.status.as_str()));
                }
                if let Some(Some(want)) = failing.get(&c.name) {
                    let got = c.residual.unwrap_or(f64::NAN);
                    if (got - want).abs() > RESIDUAL_MATCH {
                        return (false, format!("check {} residual {got:e}, expected {want:e}", c.name));
                    }
                }
            }
            if let Some(missing) = failing.keys().find(|k| r.get(k).is_none()) {
                return (false, format!("no check named {missing}"));
            }
            (true, String::new())
        }
        (Expectation::LoadError(text), Err(e)) if e.to_string().contains(text.as_str()) => (true, String::new()),
        (Expectation::LoadError(text), Err(e)) => (false, format!("load error {e:?} does not mention {text:?}")),
        (Expectation::LoadError(_), Ok(_)) => (false, "expected a load error".into()),
        (_, Err(e)) => (false, format!("load error: {e}")),
    }
}

/// Loads and runs one bundled scenario.
pub fn run_entry(entry: &CorpusEntry, options: &RunOptions) -> CorpusResult {
    let expectation = serde_json::from_str::<Value>(entry.text)
        .map_err(|e| e.to_string())
        .and_then(|v| Expectation::parse(v.get("expect")));
    let outcome = Scenario::from_str(entry.text).map(|s| s.run(options));
    let (met, note) = match &expectation {
        Ok(e) => meets(&outcome, e),
        Err(e) => (false, e.clone()),
    };
    CorpusResult {
        file: entry.file,
        outcome,
        expectation,
        met,
        note,
    }
}

pub fn run_corpus(options: &RunOptions) -> Vec<CorpusResult> {
    CORPUS.iter().map(|e| run_entry(e, options)).collect()
}

/// The bundled text of a corpus file.
pub fn text(file: &str) -> Option<&'static str> {
    CORPUS.iter().find(|e| e.file == file).map(|e| e.text)
}
