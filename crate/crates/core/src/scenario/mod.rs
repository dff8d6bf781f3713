//! Declarative scenarios: JSON documents that declare objects and checks.
//!
//! A scenario declares groups, representations, POVMs, bundles and the
//! rest by id (see [`env::Kind`] for the top-level keys) and lists checks
//! from the [`checks::REGISTRY`]. Loading builds and validates every
//! declaration; running evaluates the checks and assembles a [`Report`].

pub mod checks;
pub mod corpus;
pub mod env;
pub mod random;
mod report;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub use checks::{lookup, CheckKind, Outcome, REGISTRY};
pub use env::{Env, Kind, LoadError, ALIASES};
pub use report::{CheckRecord, Format, Report, Status, Summary};

use crate::operator::DEFAULT_TOL;

/// Version string written into reports.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0;

const META_KEYS: [&str; 5] = ["name", "description", "tolerance", "checks", "expect"];

/// One declared check.
#[derive(Clone, Debug)]
pub struct CheckSpec {
    pub name: String,
    pub kind: &'static CheckKind,
    pub tolerance: Option<f64>,
    args: Map<String, Value>,
}

/// A validated scenario.
#[derive(Debug)]
pub struct Scenario {
    pub name: String,
    pub tolerance: f64,
    pub checks: Vec<CheckSpec>,
    /// What the scenario is expected to produce, for corpus runs.
    pub expect: Option<Value>,
    doc: Map<String, Value>,
    digest: String,
}

/// Options for [`Scenario::run`].
#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Overrides the scenario tolerance; per-check tolerances still win.
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub parallel: bool,
    /// Record per-check wall time. Off by default so reports are
    /// byte-identical across runs.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tolerance: None,
            seed: DEFAULT_SEED,
            parallel: true,
            timing: false,
        }
    }
}

impl std::fmt::Debug for Env {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Env").field("seed", &self.seed()).field("tol", &self.tol()).finish()
    }
}

/// SHA-256 of the canonical (sorted-key, compact) serialization.
pub fn canonical_digest(v: &Value) -> String {
    let bytes = serde_json::to_vec(v).expect("JSON values serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LoadError {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Scenario::from_str(&text)
}

impl Scenario {
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, LoadError> {
        let value: Value = serde_json::from_str(text).map_err(|e| LoadError {
            path: "$".into(),
            message: format!("invalid JSON: {e}"),
        })?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, LoadError> {
        let doc = env::obj(value, "$")?.clone();
        for key in doc.keys() {
            let known = META_KEYS.contains(&key.as_str())
                || Kind::ALL.iter().any(|k| k.key() == key)
                || ALIASES.iter().any(|(a, _, _)| a == key);
            if !known {
                return env::err(key, "unknown top-level key");
            }
        }
        let name = match doc.get("name") {
            Some(n) => env::str_of(n, "name")?.to_string(),
            None => String::new(),
        };
        let tolerance = match doc.get("tolerance") {
            Some(t) => {
                let t = env::f64_of(t, "tolerance")?;
                if !(t.is_finite() && t >= 0.0) {
                    return env::err("tolerance", "tolerance must be finite and non-negative");
                }
                t
            }
            None => DEFAULT_TOL,
        };
        let env = Env::new(&doc, DEFAULT_SEED, tolerance)?;
        env.build_all()?;
        let mut checks = Vec::new();
        if let Some(list) = doc.get("checks") {
            for (i, c) in env::arr(list, "checks")?.iter().enumerate() {
                let path = format!("checks[{i}]");
                let kind = checks::validate_check(&env, c, &path)?;
                let o = c.as_object().expect("validated as an object");
                let name = o
                    .get("name")
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("{}#{i}", kind.name));
                if checks.iter().any(|c: &CheckSpec| c.name == name) {
                    return env::err(&path, format!("duplicate check name {name:?}"));
                }
                let args = o
                    .iter()
                    .filter(|(k, _)| !checks::RESERVED.contains(&k.as_str()))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                checks.push(CheckSpec {
                    name,
                    kind,
                    tolerance: o.get("tolerance").and_then(Value::as_f64),
                    args,
                });
            }
        }
        let digest = canonical_digest(value);
        Ok(Self {
            name,
            tolerance,
            checks,
            expect: doc.get("expect").cloned(),
            doc,
            digest,
        })
    }

    /// SHA-256 of the canonical serialization; independent of key order.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// Number of declarations of a kind.
    pub fn count(&self, kind: Kind) -> usize {
        Env::new(&self.doc, DEFAULT_SEED, self.tolerance).map(|e| e.count(kind)).unwrap_or(0)
    }

    /// An environment over this scenario's declarations.
    pub fn env(&self, seed: u64) -> Env {
        Env::new(&self.doc, seed, self.tolerance).expect("validated at load")
    }

    /// Runs every check. Failures to evaluate a check become
    /// precondition-error entries; the report keeps declaration order.
    pub fn run(&self, options: &RunOptions) -> Report {
        let env = self.env(options.seed);
        let base_tol = options.tolerance.unwrap_or(self.tolerance);
        let one = |(i, spec): (usize, &CheckSpec)| {
            let tol = spec.tolerance.unwrap_or(base_tol);
            let start = Instant::now();
            let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                checks::run_check(&env, spec.kind, &spec.args, &format!("checks[{i}]"), tol)
            }))
            .unwrap_or_else(|_| Err(checks::CheckFailure("internal error while evaluating the check".into())));
            let elapsed = start.elapsed().as_secs_f64();
            let mut rec = match outcome {
                Ok(o) => {
                    let pass = o.pass.unwrap_or(o.residual <= tol);
                    CheckRecord {
                        name: spec.name.clone(),
                        kind: spec.kind.name.to_string(),
                        status: if pass { Status::Pass } else { Status::Fail },
                        residual: Some(o.residual),
                        message: None,
                        detail: o.detail,
                        runtime: None,
                    }
                }
                Err(e) => CheckRecord {
                    name: spec.name.clone(),
                    kind: spec.kind.name.to_string(),
                    status: Status::PreconditionError,
                    residual: None,
                    message: Some(e.0),
                    detail: None,
                    runtime: None,
                },
            };
            if options.timing {
                rec.runtime = Some(elapsed);
            }
            rec
        };
        let records: Vec<CheckRecord> = if options.parallel {
            self.checks.par_iter().enumerate().map(one).collect()
        } else {
            self.checks.iter().enumerate().map(one).collect()
        };
        Report::new(records).with_metadata(report::Metadata {
            scenario: self.name.clone(),
            toolkit_version: TOOLKIT_VERSION.to_string(),
            input_digest: self.digest.clone(),
            seed: options.seed,
            tolerance: base_tol,
        })
    }
}
