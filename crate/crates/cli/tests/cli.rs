use std::process::{Command, Output};

use serde_json::Value;

fn spectral(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral")).args(args).output().expect("run spectral")
}

fn json(args: &[&str]) -> Value {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let out = spectral(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn field(v: &Value, key: &str) -> f64 {
    v["rows"][0][key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn zn_table() {
    let want = [1.88988, 2.75510, 3.61072, 4.46158, 5.30973, 6.15620, 7.00155, 7.84612, 8.69012];
    let v = json(&["zn", "--from", "2", "--to", "10"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    for (row, w) in rows.iter().zip(want) {
        assert!((row["z"].as_f64().unwrap() - w).abs() < 5e-6);
    }
    let table = String::from_utf8(spectral(&["zn", "--from", "2", "--to", "10"]).stdout).unwrap();
    assert!(table.contains("2.75510") && table.contains("8.69012"), "{table}");
}

#[test]
fn capset_report() {
    let out = spectral(&["capset", "--m", "3", "--p", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2.75510"), "{text}");
    let v = json(&["capset", "--m", "3", "--p", "3"]);
    assert!(v["rows"][0]["binomial_transform_verified"].as_bool().unwrap());
    assert!(v["rows"][0]["relabel_to_polymult_verified"].as_bool().unwrap());
    assert!(!v["rows"][0]["degeneration_maps"].as_str().unwrap().is_empty());
    assert!(!v["rows"][0]["degeneration_lp_maps"].as_str().unwrap().is_empty());
}

#[test]
fn quantum_lower_w() {
    let v = json(&["quantum-lower", "--family", "W", "--theta", "uniform", "--seed", "7"]);
    assert!((field(&v, "value") - 0.918296).abs() < 1e-3);
    assert_eq!(v["command"], "quantum-lower");
}

#[test]
fn reports_carry_version_and_tolerances() {
    let v = json(&["slicerank", "--family", "W", "--starts", "4"]);
    assert_eq!(v["version"].as_str().unwrap(), spectral_core::VERSION);
    assert!(v["tolerances"]["route_agreement"].as_f64().is_some());
    assert_eq!(v["rows"][0]["slice_rank_exact"], 2);
    let csv = String::from_utf8(spectral(&["--format", "csv", "zn", "--to", "3"]).stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), format!("# zn {}", spectral_core::VERSION));
    assert!(lines.next().unwrap().starts_with("# bisection="));
    assert_eq!(lines.next().unwrap(), "n,z,gamma");
}

#[test]
fn digits_option() {
    let v = json(&["--digits", "3", "zn", "--from", "3", "--to", "3"]);
    assert_eq!(v["rows"][0]["z"].as_f64().unwrap(), 2.76);
}

#[test]
fn other_verbs() {
    let v = json(&["tight", "--support", "phi:4"]);
    assert_eq!(v["rows"][0]["tight"], true);
    assert_eq!(v["rows"][0]["verified"], true);
    let v = json(&["tight", "--support", "psi:2"]);
    assert_eq!(v["rows"][0]["tight"], false);
    let v = json(&["degeneration", "--psi", "psi:3", "--phi", "phi:3"]);
    assert!((field(&v, "subrank_lower_bound") - 2.75510).abs() < 1e-4);
    let v = json(&["subrank-asymptotic", "--support", "phi:2"]);
    assert!((field(&v, "value") - 1.88988).abs() < 1e-4);
    let v = json(&["subrank-exact", "--support", "unit:4"]);
    assert_eq!(v["rows"][0]["subrank"], 4);
    let v = json(&["kron", "--lambda", "2,1", "--mu", "2,1", "--nu", "2,1"]);
    assert_eq!(v["rows"][0]["g"], 1);
    let v = json(&["lr", "--lambda", "2,1", "--mu", "2", "--nu", "1"]);
    assert_eq!(v["rows"][0]["c"], 1);
    let v = json(&["support-upper", "--family", "cw:2"]);
    assert!((field(&v, "rho_upper") - 1.58496).abs() < 1e-4);
    let v = json(&["support-lower", "--family", "unit:3"]);
    assert!((field(&v, "rho_lower") - 3f64.log2()).abs() < 1e-5);
    let v = json(&["quantum-cert", "--family", "unit:2", "--theta", "1,0,0", "--n", "2"]);
    assert_eq!(field(&v, "value"), 1.0);
    let v = json(&["quantum-lower", "--family", "unit:2", "--theta", "bip:{1}|{2,3}=0.5,{1,2}|{3}=0.5", "--starts", "2"]);
    assert!((field(&v, "value") - 1.0).abs() < 1e-6);
}

#[test]
fn family_round_trip_through_file() {
    let dir = std::env::temp_dir().join(format!("spectral-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("w.txt");
    let p = path.to_str().unwrap();
    let v = json(&["family", "--family", "W", "--out", p]);
    assert_eq!(v["rows"][0]["support_size"], 3);
    let from_file = json(&["quantum-lower", "--tensor", p, "--starts", "4"]);
    let from_family = json(&["quantum-lower", "--family", "W", "--starts", "4"]);
    assert_eq!(from_file["rows"], from_family["rows"]);
    let trace = dir.join("trace.csv");
    let out = spectral(&["quantum-lower", "--family", "W", "--starts", "2", "--trace", trace.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("iteration,objective\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(spectral(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(spectral(&[]).status.code(), Some(2));
    assert_eq!(spectral(&["quantum-lower", "--family", "W", "--theta", "0.5,0.5"]).status.code(), Some(2));
    assert_eq!(spectral(&["quantum-lower", "--family", "W", "--theta", "bip:{2}|{1,3}=1"]).status.code(), Some(2));
    assert_eq!(spectral(&["quantum-lower", "--family", "nope:3"]).status.code(), Some(2));
    assert_eq!(spectral(&["subrank-asymptotic", "--support", "psi:2"]).status.code(), Some(2));
    assert_eq!(spectral(&["capset", "--m", "6", "--p", "2"]).status.code(), Some(2));
    let out = spectral(&["--format", "json", "subrank-exact", "--support", "psi:6", "--node-budget", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"][0]["exact"], false);
    assert_eq!(spectral(&["quantum-cert", "--family", "W", "--n", "5"]).status.code(), Some(3));
    assert_eq!(spectral(&["--help"]).status.code(), Some(0));
    assert_eq!(spectral(&["--version"]).status.code(), Some(0));
}

#[test]
fn deterministic_across_runs_and_threads() {
    let args = ["--format", "json", "--seed", "3", "slicerank", "--family", "cw:1", "--starts", "6"];
    let runs: Vec<Vec<u8>> = ["1", "4", "4"]
        .iter()
        .map(|threads| {
            let out = Command::new(env!("CARGO_BIN_EXE_spectral"))
                .args(args)
                .env("SPECTRAL_THREADS", threads)
                .output()
                .unwrap();
            assert!(out.status.success());
            out.stdout
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
}
