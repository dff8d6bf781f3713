//! Loading, running and reporting scenarios.

use std::collections::BTreeSet;

use qframes::scenario::corpus::{self, CORPUS};
use qframes::scenario::{lookup, Format, Report, RunOptions, Scenario, Status, REGISTRY};
use serde_json::{json, Value};

fn load(v: Value) -> Scenario {
    Scenario::from_value(&v).unwrap_or_else(|e| panic!("{e}"))
}

fn load_err(v: Value) -> String {
    Scenario::from_value(&v).map(|_| ()).expect_err("should not load").to_string()
}

fn z2() -> Value {
    json!({
        "group": {"builtin": "cyclic", "n": 2},
        "system_rep": {"group": "G", "matrices": [{"identity": 2}, {"pauli": "X"}]},
        "frame_rep": {"group": "G", "builtin": "right_regular"},
        "frame_povm": {"ideal_group": "G"},
        "operators": {"Z": {"pauli": "Z"}, "ZZ": {"kron": [{"pauli": "Z"}, {"pauli": "Z"}]}},
        "states": {"uniform": {"maximally_mixed": 2}},
    })
}

fn with_checks(mut doc: Value, checks: Value) -> Value {
    doc["checks"] = checks;
    doc
}

#[test]
fn registry_is_complete_and_reachable() {
    let names: BTreeSet<&str> = REGISTRY.iter().map(|k| k.name).collect();
    assert_eq!(names.len(), REGISTRY.len(), "duplicate check names");
    let modules: BTreeSet<&str> = REGISTRY.iter().map(|k| k.module).collect();
    for m in ["group_frame", "bundle", "integral", "measure", "pde", "geometry"] {
        assert!(modules.contains(m), "no checks for {m}");
    }
    let mut used = BTreeSet::new();
    for entry in CORPUS {
        let v: Value = serde_json::from_str(entry.text).unwrap();
        for c in v["checks"].as_array().into_iter().flatten() {
            used.insert(c["kind"].as_str().unwrap().to_string());
        }
    }
    for k in REGISTRY {
        assert!(std::ptr::eq(lookup(k.name).unwrap(), k));
        assert!(used.contains(k.name), "check kind {} is not exercised by any bundled scenario", k.name);
        assert!(!k.summary.is_empty());
    }
}

#[test]
fn corpus_meets_expectations() {
    assert!(CORPUS.len() >= 10);
    for r in corpus::run_corpus(&RunOptions::default()) {
        assert!(r.met, "{}: {}", r.file, r.note);
    }
}

#[test]
fn reports_are_deterministic() {
    for entry in CORPUS {
        let Ok(s) = Scenario::from_str(entry.text) else { continue };
        let par = s.run(&RunOptions::default()).emit(Format::Json);
        let again = s.run(&RunOptions::default()).emit(Format::Json);
        let seq = s.run(&RunOptions { parallel: false, ..RunOptions::default() }).emit(Format::Json);
        assert_eq!(par, again, "{}", entry.file);
        assert_eq!(par, seq, "{}", entry.file);
    }
}

#[test]
fn empty_scenario_passes_with_no_checks() {
    let s = load(json!({}));
    let r = s.run(&RunOptions::default());
    assert!(r.checks.is_empty() && r.all_pass());
    let v = r.to_json();
    assert_eq!(v["checks"], json!([]));
    assert_eq!(v["summary"], json!({"pass": 0, "fail": 0}));
    assert_eq!(String::from_utf8(Report::default().emit(Format::Json)).unwrap(), r#"{"checks":[],"summary":{"fail":0,"pass":0}}"#);
}

#[test]
fn report_carries_metadata() {
    let s = load(with_checks(z2(), json!([{"kind": "unitality", "frame": "frame", "system": "system"}])));
    let v = s.run(&RunOptions { seed: 9, ..RunOptions::default() }).to_json();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["tolerance"], 1e-10);
    assert_eq!(v["input_digest"].as_str().unwrap(), s.digest());
    assert_eq!(v["checks"][0]["name"], "unitality#0");
    assert!(v["checks"][0].get("runtime").is_none());
    let timed = s.run(&RunOptions { timing: true, ..RunOptions::default() }).to_json();
    assert!(timed["checks"][0]["runtime"].is_number());
}

#[test]
fn load_errors_name_the_problem() {
    let cases = [
        (json!({"bogus": 1}), "unknown top-level key"),
        (with_checks(z2(), json!([{"kind": "no_such_check"}])), "no_such_check"),
        (with_checks(z2(), json!([{"kind": "unitality", "frame": "frame"}])), "system"),
        (with_checks(z2(), json!([{"kind": "unitality", "frame": "frame", "system": "system", "extra": 1}])), "extra"),
        (with_checks(z2(), json!([{"kind": "relativize", "frame": "frame", "system": "system", "operator": "W", "expected": "ZZ"}])), "W"),
        (
            with_checks(z2(), json!([{"kind": "unitality", "name": "u", "frame": "frame", "system": "system"}, {"kind": "unitality", "name": "u", "frame": "frame", "system": "system"}])),
            "duplicate check name",
        ),
        (json!({"tolerance": -1.0}), "tolerance"),
        (json!({"povms": {"bad": {"space": ["a"], "effects": {"a": {"pauli": "Z"}}}}}), "spectrum"),
        (json!({"group": {"builtin": "cyclic", "n": 2}, "reps": {"r": {"group": "G", "matrices": [{"pauli": "X"}, {"pauli": "X"}]}}}), "reps.r"),
    ];
    for (doc, needle) in cases {
        let e = load_err(doc.clone());
        assert!(e.contains(needle), "{doc}: {e:?} does not mention {needle:?}");
    }
    assert!(Scenario::from_str("{not json").is_err());
}

#[test]
fn tolerance_precedence() {
    // Restricting Z to the frame state |0><0| + 0.5 mixing leaves an error of 0.5.
    let mut doc = with_checks(
        z2(),
        json!([
            {"kind": "restriction", "name": "loose", "frame": "frame", "system": "system", "operator": "Z", "omega": "half", "expected": "Z", "tolerance": 0.6},
            {"kind": "restriction", "name": "plain", "frame": "frame", "system": "system", "operator": "Z", "omega": "half", "expected": "Z"},
        ]),
    );
    doc["states"]["half"] = json!({"mix": {"weight": 0.5, "a": "uniform", "b": {"basis": 0, "dim": 2}}});
    let s = load(doc.clone());
    let r = s.run(&RunOptions::default());
    assert_eq!(r.get("loose").unwrap().status, Status::Pass);
    assert_eq!(r.get("plain").unwrap().status, Status::Fail);
    assert!((r.get("plain").unwrap().residual.unwrap() - 0.5).abs() < 1e-12);
    let r = s.run(&RunOptions { tolerance: Some(0.7), ..RunOptions::default() });
    assert!(r.all_pass());
    doc["tolerance"] = json!(0.7);
    let r = load(doc).run(&RunOptions { tolerance: Some(0.1), ..RunOptions::default() });
    assert_eq!(r.get("plain").unwrap().status, Status::Fail);
    assert_eq!(r.get("loose").unwrap().status, Status::Pass);
}

#[test]
fn failed_preconditions_are_reported_not_fatal() {
    let mut doc = with_checks(
        z2(),
        json!([
            {"kind": "born", "name": "wrong_dim", "povm": "frame", "state": "big"},
            {"kind": "unitality", "frame": "frame", "system": "system"},
        ]),
    );
    doc["states"]["big"] = json!({"maximally_mixed": 3});
    let r = load(doc).run(&RunOptions::default());
    let bad = r.get("wrong_dim").unwrap();
    assert_eq!(bad.status, Status::PreconditionError);
    assert!(bad.residual.is_none() && bad.message.is_some());
    assert_eq!(r.to_json()["checks"][0]["residual"], Value::Null);
    assert_eq!(r.summary().pass, 1);
    assert_eq!(r.summary().fail, 1);
}

#[test]
fn seeds_change_random_inputs_only() {
    let doc = json!({
        "operators": {"a": {"random": 2}},
        "checks": [{"kind": "channel_duality", "channel": {"depolarizing": 2}, "state": {"random": 2}, "operator": "a"}],
    });
    let s = load(doc);
    let a = s.run(&RunOptions { seed: 1, ..RunOptions::default() });
    let b = s.run(&RunOptions { seed: 2, ..RunOptions::default() });
    assert!(a.all_pass() && b.all_pass());
    assert_ne!(a.emit(Format::Json), b.emit(Format::Json));
    assert_eq!(a.input_digest(), b.input_digest());
}

#[test]
fn expected_failure_residual_is_reported() {
    let s = Scenario::from_str(corpus::text("broken_covariance.json").unwrap()).unwrap();
    let r = s.run(&RunOptions::default());
    let c = r.get("trivial_covariance").unwrap();
    assert_eq!(c.status, Status::Fail);
    assert!((c.residual.unwrap() - 1.0).abs() < 1e-12);
}
