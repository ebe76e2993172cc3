use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn model(name: &str) -> String {
    models().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eosym"))
        .args(args)
        .output()
        .expect("run eosym")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_fixtures() {
    for name in ["eos-s8.eos", "kitchen.eos", "kitchen-idle.eos"] {
        let o = run(&["validate", &model(name)]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert_eq!(stdout(&o), "valid\n");
    }
    let o = run(&["validate", &model("eos-s8.eos"), "--conservative", "--pt-like"]);
    assert_eq!(stdout(&o), "valid\nconservative: true\npt-like: false\n");
}

#[test]
fn diagnostics_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.eos");
    std::fs::write(&bad, "systemnet\n place p\n type p N9\nend\n").unwrap();
    let o = run(&["validate", &bad.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(":3:9: unknown identifier"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());

    let o = run(&["validate", &dir.path().join("missing.eos").to_string_lossy()]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["canon", &model("kitchen.eos"), "--marking", "S1[nope]"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_are_nonzero() {
    for args in [
        &["bogus"][..],
        &["fire", &model("eos-s8.eos")],
        &["explore", &model("kitchen.eos"), "--reduce", "sideways"],
        &[],
    ] {
        let o = run(args);
        assert_ne!(o.status.code(), Some(0), "{args:?}");
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn fire_lists_modes_and_picks_one() {
    let path = model("kitchen.eos");
    let o = run(&["fire", &path, "--event", "move12[]"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "[0] 1'S2[p0]\n");

    let o = run(&["fire", &path, "--event", "sa1[recipe:a]", "--mode", "0"]);
    assert_eq!(stdout(&o), "1'S1[p1+p2]\n");

    let o = run(&["fire", &path, "--event", "move21[]"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not enabled"), "{}", stderr(&o));

    let o = run(&["fire", &path, "--event", "nosuch[]"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn auts_prints_order_and_generators() {
    let o = run(&["auts", &model("kitchen.eos")]);
    let out = stdout(&o);
    assert!(out.starts_with("order: 4\ngenerators:\n"), "{out}");
    assert!(!out.contains("elements:"));
    let o = run(&["auts", &model("kitchen.eos"), "--elements"]);
    let out = stdout(&o);
    let elements = out.split("elements:\n").nth(1).unwrap();
    assert_eq!(elements.lines().count(), 4);
}

#[test]
fn canon_prints_the_representative() {
    let o = run(&["canon", &model("kitchen.eos"), "--marking", "S1[p2+p3] + S2[p1+p4] + S2[p2+p3]"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1'S1[p1+p4] + 1'S1[p2+p3] + 1'S2[p2+p3]\n");
    let o = run(&["canon", &model("kitchen.eos")]);
    assert_eq!(stdout(&o), "1'S1[p0]\n");
}

#[test]
fn explore_with_verification() {
    let o = run(&["explore", &model("kitchen.eos"), "--reduce", "aut", "--verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let reduced = v["stats"]["states"].as_u64().unwrap();
    let full = v["full_states"].as_u64().unwrap();
    assert!(reduced < full, "{reduced} < {full}");
    assert_eq!(v["verify"]["violations"], Value::Array(vec![]));
    assert_eq!(v["stats"]["group_order"], 4);
    assert_eq!(v["stats"]["wall_ms"], Value::Null);
}

#[test]
fn explore_writes_dot_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let json = dir.path().join("g.json");
    let o = run(&[
        "explore",
        &model("eos-s8.eos"),
        "--reduce",
        "none",
        "--dot",
        &dot.to_string_lossy(),
        "--stats",
        &json.to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let dot = std::fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("digraph reachability {\n"));
    assert_eq!(dot.matches(" -> ").count(), 4);
    let stats: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(stats["states"], 5);
    assert_eq!(stats["edges"], 4);
    assert_eq!(stats["reduction"], "none");

    let o = run(&["explore", &model("eos-s8.eos"), "--reduce", "none", "--timing"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["wall_ms"].is_u64());
}

#[test]
fn truncation_and_strict() {
    let path = model("kitchen.eos");
    let o = run(&["explore", &path, "--reduce", "none", "--max-states", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["truncated"], true);
    assert_eq!(v["states"], 3);

    let o = run(&["explore", &path, "--reduce", "none", "--max-states", "3", "--strict"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["explore", &path, "--reduce", "none", "--max-depth", "1", "--strict"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["explore", &path, "--reduce", "aut", "--strict"]);
    assert_eq!(o.status.code(), Some(0));
}
