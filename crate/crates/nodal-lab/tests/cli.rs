//! End-to-end smoke tests against the compiled binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nodal-lab"))
}

#[test]
fn weyl_matches_lattice_count() {
    let out = bin().args(["weyl", "--n", "2", "--L", "10000"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["results"]["N_L"], 31417);
    let ratio = v["results"]["ratio"].as_f64().unwrap();
    assert!((ratio - 3.1417).abs() < 1e-9);
}

#[test]
fn constants_emits_log10_fields() {
    let out = bin()
        .args(["constants", "--n", "2", "--c", "1", "--d", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["results"]["tau_thm3"]["log10"].as_f64().unwrap() > 0.0);
    assert!(v["results"]["p_lower"]["log10"].as_f64().unwrap() < 0.0);
    assert!(v["results"]["c_lower"]["log10"].as_f64().unwrap() < 0.0);
    let checks = v["results"]["chain_checks"].as_array().unwrap();
    assert!(!checks.is_empty() && checks.iter().all(|c| c["ok"] == true));
    // round-trip: parse(emit(x)) = x
    let tau: nodal_lab::LogReal =
        serde_json::from_value(v["results"]["tau_thm3"].clone()).unwrap();
    let expect = nodal_lab::constants::theorem3_tau(2, 1.0, 1.0);
    assert!((tau.ln() - expect.ln()).abs() < 1e-9);
}

#[test]
fn certify_lemma5_exits_zero() {
    // small grid keeps the smoke test fast; acceptance covers 1024
    let out = bin()
        .args([
            "certify", "--builtin", "lemma5", "--n", "2", "--i", "0", "--delta", "0.5",
            "--grid", "512",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["certified"], true);
}

#[test]
fn usage_errors_exit_64() {
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    let out = bin().args(["weyl", "--n", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn bad_precondition_exits_3() {
    // n = 3 ensembles are unsupported
    let out = bin().args(["weyl", "--n", "3", "--L", "100"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    // eta above c/48n
    let out = bin()
        .args(["localmodel", "--n", "2", "--i", "0", "--c", "1", "--eta", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("results.json");
    let svg_dir = dir.path().join("plots");
    let out = bin()
        .args([
            "simulate", "--n", "2", "--L", "50", "--trials", "3", "--grid", "64",
            "--seed", "7", "--csv", "--svg-dir",
        ])
        .arg(&svg_dir)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["seed"], 7);
    let per_trial = v["results"]["per_trial"].as_array().unwrap();
    assert_eq!(per_trial.len(), 3);
    for t in per_trial {
        assert!(t["b0"].as_u64().is_some());
        assert!(t["sup_norm"].as_f64().unwrap() > 0.0);
        assert!(t["grad_sup"].as_f64().unwrap() > 0.0);
    }
    assert!(v["results"]["aggregates"]["stderr"].as_f64().is_some());
    // CSV table next to the JSON
    let csv = std::fs::read_to_string(out_path.with_extension("csv")).unwrap();
    assert!(csv.starts_with("trial,b0,n_loops_in_ball,sup_norm,grad_sup\n"));
    assert_eq!(csv.lines().count(), 4);
    // one SVG per trial
    let svgs: Vec<_> = std::fs::read_dir(&svg_dir).unwrap().collect();
    assert_eq!(svgs.len(), 3);
    // determinism: same seed, same JSON
    let out2_path = dir.path().join("results2.json");
    let out2 = bin()
        .args([
            "simulate", "--n", "2", "--L", "50", "--trials", "3", "--grid", "64",
            "--seed", "7",
        ])
        .arg("--out")
        .arg(&out2_path)
        .output()
        .unwrap();
    assert!(out2.status.success());
    let v2: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out2_path).unwrap()).unwrap();
    assert_eq!(v["results"]["per_trial"], v2["results"]["per_trial"]);
}

#[test]
fn threads_flag_and_env_are_accepted() {
    let out = bin()
        .args(["--threads", "4", "weyl", "--n", "2", "--L", "100"])
        .env("NODAL_LAB_THREADS", "8")
        .output()
        .unwrap();
    assert!(out.status.success());
}
