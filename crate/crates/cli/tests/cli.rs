use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn covercheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covercheck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_single_covering_ball() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "inst.json",
        r#"{"space": {"kind": "interval"}, "centers": [0.5], "radius": 0.5}"#,
    );
    let cert = dir.path().join("cert.json");
    let out = covercheck(&[
        "check",
        "--instance",
        &inst,
        "--emit-cert",
        cert.to_str().unwrap(),
        "--assert",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    assert_eq!(v["verdict"], "disintegrable");
    let digest = v["certificate_sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    let again = covercheck(&["check", "--instance", &inst, "--emit-cert", cert.to_str().unwrap()]);
    assert_eq!(json_out(&again)["certificate_sha256"], digest);
}

#[test]
fn check_reports_witness() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "inst.json",
        r#"{"space": {"kind": "interval"}, "centers": [0.1, 0.15], "radius": 0.1}"#,
    );
    let out = covercheck(&["check", "--instance", &inst, "--mode", "brute", "--assert"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    assert_eq!(v["verdict"], "not_disintegrable");
    assert_eq!(v["witness_verified"], true);
}

#[test]
fn check_graph_and_cube_points() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(
        dir.path(),
        "g.json",
        r#"{"space": {"kind": "graph", "vertices": [[0,0],[1,0],[0.5,0.8]], "edges": [[0,1],[0,2],[1,2]]},
            "centers": [{"edge": 0, "t": 0.5}, {"edge": 2, "t": 0.5}], "radius": 2.0}"#,
    );
    let out = covercheck(&["check", "--instance", &graph]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_out(&out)["verdict"], "disintegrable");
    let cube = write(
        dir.path(),
        "c.json",
        r#"{"space": {"kind": "cube_linf", "dim": 2}, "centers": [[0.5, 0.5]], "radius": 0.5}"#,
    );
    let out = covercheck(&["check", "--instance", &cube, "--mode", "arrangement"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_out(&out)["verdict"], "disintegrable");
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{ not json");
    assert_eq!(covercheck(&["check", "--instance", &bad]).status.code(), Some(2));
    assert_eq!(covercheck(&["mc", "--config", &bad, "--seed", "1"]).status.code(), Some(2));
    let unknown = write(
        dir.path(),
        "u.json",
        r#"{"space": {"kind": "interval"}, "n_grid": [10], "trials": 2, "seed": 0, "extra": 1}"#,
    );
    assert_eq!(covercheck(&["mc", "--config", &unknown, "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(covercheck(&["counterexample"]).status.code(), Some(2));
    assert_eq!(covercheck(&["rate", "--family", "interval", "--n", "10", "--bogus"]).status.code(), Some(2));
    assert_eq!(covercheck(&["rate", "--family", "moon", "--n", "10"]).status.code(), Some(2));
    assert_eq!(covercheck(&["rate", "--family", "interval", "--n", "1"]).status.code(), Some(2));
}

#[test]
fn counterexample_all_refuted() {
    let out = covercheck(&["counterexample", "--seed", "1", "--n-grid", "5,50", "--assert"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    for cell in v["cells"].as_array().unwrap() {
        assert_eq!(cell["not_disintegrable"], 100);
        assert_eq!(cell["witnesses_verified"], 100);
    }
}

#[test]
fn counterexample_assert_trips_when_covered() {
    // Radius 2 covers both components, so nothing is refuted.
    let out = covercheck(&["counterexample", "--seed", "1", "--n-grid", "5", "--trials", "3", "--radius", "2", "--assert"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn mc_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"space": {"kind": "circle"}, "n_grid": [20, 40], "trials": 20, "seed": 0}"#,
    );
    let run = |name: &str, seed: &str| {
        let p = dir.path().join(name);
        let out = covercheck(&["mc", "--config", &cfg, "--seed", seed, "--r-mult", "0.2,1", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(p).unwrap()
    };
    let a = run("a.csv", "5");
    assert_eq!(a, run("b.csv", "5"));
    assert_ne!(a, run("c.csv", "6"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(
        "family,n,r,trials,failures,inconclusive,rate_hat,ci_upper,eps_n,r_formula,seconds\n"
    ));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn mc_assert_flags_inconsistent_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"space": {"kind": "interval"}, "n_grid": [50], "trials": 30, "seed": 0, "r_mult": [0.05]}"#,
    );
    let out = covercheck(&["mc", "--config", &cfg, "--seed", "2", "--assert"]);
    assert_eq!(out.status.code(), Some(3));
    let json = dir.path().join("r.json");
    let out = covercheck(&["mc", "--config", &cfg, "--seed", "2", "--r-mult", "1", "--out-json", json.to_str().unwrap(), "--assert"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&std::fs::read(json).unwrap()).unwrap();
    assert_eq!(v["cells"][0]["failures"], 0);
}

#[test]
fn rate_values() {
    let out = covercheck(&["rate", "--family", "circle", "--n", "100,10000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    let r = v["rows"][1]["r"].as_f64().unwrap();
    assert!((r - 2.0 * (3.0 * 1e4f64.ln() / 1e4).sqrt()).abs() < 1e-14);
    assert_eq!(v["rows"][0]["eps"], 0.01);
}

#[test]
fn wasserstein_and_lipschitz_demo() {
    let out = covercheck(&["wasserstein", "--n", "128", "--seed", "3", "--matching", "256", "--assert"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    assert_eq!(v["wasserstein"].as_array().unwrap().len(), 3);
    let out = covercheck(&["lipschitz-demo", "--n", "100", "--seed", "4", "--pl-count", "3", "--assert"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    assert_eq!(v["functions"].as_array().unwrap().len(), 5);
    assert!(covercheck(&["lipschitz-demo", "--n", "100"]).status.code() == Some(2));
}
