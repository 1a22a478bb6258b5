use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qdiode(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdiode"))
        .arg("--output-dir")
        .arg(out)
        .args(args)
        .env_remove("QDIODE_OUTPUT_DIR")
        .output()
        .expect("spawn qdiode")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_schema_headers(dir: &Path) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => assert!(text.starts_with("# schema_version: 1\n"), "{}", path.display()),
            Some("json") if path.file_name().unwrap() != "manifest.json" => {
                assert!(text.starts_with("{\n  \"schema_version\": 1,"), "{}", path.display())
            }
            _ => {}
        }
    }
}

#[test]
fn cpr_summary_and_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdiode(dir.path(), &["cpr", "--eta", "0.276"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("ic_plus=1.276000 ic_minus=-0.724000"));
    let s = json(&dir.path().join("cpr_summary.json"));
    assert!((s["efficiency"].as_f64().unwrap() - 0.276).abs() < 1e-12);
    assert_eq!(json(&dir.path().join("resolved_config.json"))["settings"]["eta"], 0.276);
    assert_schema_headers(dir.path());

    let o = qdiode(dir.path(), &["cpr", "--eta", "0"]);
    assert!(stdout(&o).contains("efficiency=0.000000"));

    let o = qdiode(dir.path(), &["cpr", "--eta", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qdiode(dir.path(), &["cpr"]).status.code(), Some(2));
    assert_eq!(qdiode(dir.path(), &["wells", "--ej-ec", "20", "--sweep", "1:0:1"]).status.code(), Some(2));
    assert_eq!(qdiode(dir.path(), &["--threads", "0", "cpr", "--eta", "0.1"]).status.code(), Some(2));
}

#[test]
fn wells_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdiode(dir.path(), &["wells", "--ej-ec", "20", "--eta", "0.276"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("bound_count=2"));
    assert_eq!(json(&dir.path().join("wells.json"))["bound_count"], 2);
    assert_schema_headers(dir.path());

    let o = qdiode(dir.path(), &["wells", "--ej-ec", "20", "--eta", "0.10"]);
    assert!(stdout(&o).contains("bound_count=3"));
    let o = qdiode(dir.path(), &["wells", "--ej-ec", "20", "--eta", "0.10", "--wide"]);
    assert!(stdout(&o).contains("bound_count=3"));
}

#[test]
fn wells_sweep_window() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdiode(dir.path(), &["--threads", "2", "wells", "--ej-ec", "20", "--sweep", "0.01:0.9:0.005"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w = json(&dir.path().join("two_level_windows.json"));
    let windows = w["two_level_windows"].as_array().unwrap();
    assert_eq!(windows.len(), 1);
    let (lo, hi) = (windows[0]["lo"].as_f64().unwrap(), windows[0]["hi"].as_f64().unwrap());
    assert!(lo <= 0.276 && 0.276 <= hi);
    assert!(lo > 0.10 && hi < 0.50);
    assert_schema_headers(dir.path());
}

#[test]
fn fidelity_map_noiseless_properties() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdiode(dir.path(), &["fidelity-map"]);
    assert!(o.status.success());
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(dir.path().join("fidelity_map.csv"))
        .unwrap();
    let rows: Vec<Vec<f64>> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 91 * 91);
    assert!(rows.iter().filter(|r| r[0] == 0.0).all(|r| r[4].abs() < 1e-10));
    assert!(rows.iter().any(|r| r[2] > 0.99));
    assert_schema_headers(dir.path());
}

#[test]
fn fidelity_map_config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("chain.json");
    std::fs::write(&cfg, r#"{"chain": {"n_qubits": 4}, "noise": {"n_trajectories": 5, "seed": 9}}"#).unwrap();
    let out = dir.path().join("out");
    let o = qdiode(
        &out,
        &["fidelity-map", "--config", cfg.to_str().unwrap(), "--seed", "3", "--eta-grid", "0:0.5:0.25", "--t-grid", "1:3:1"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("resolved_config.json"));
    assert_eq!(r["settings"]["chain"]["n_qubits"], 4);
    assert_eq!(r["settings"]["noise"]["n_trajectories"], 5);
    assert_eq!(r["settings"]["noise"]["seed"], 3);
    std::fs::write(&cfg, r#"{"chain": {"n_qbits": 4}}"#).unwrap();
    let o = qdiode(&out, &["fidelity-map", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fidelity_map_noisy_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(qdiode(&a, &["fidelity-map", "--noise", "--seed", "1234"]).status.success());
    assert!(qdiode(&b, &["--threads", "2", "fidelity-map", "--noise", "--seed", "1234"]).status.success());
    for name in ["fidelity_map.csv", "fidelity_rows.csv", "fidelity_summary.json", "resolved_config.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn iv_pipeline_recovers_voltage_noise_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let o = qdiode(&corpus, &["synth-iv", "--ic-jitter", "0"]);
    assert!(o.status.success());
    let out = dir.path().join("out");
    let o = qdiode(&out, &["iv", "--manifest", corpus.join("manifest.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = json(&out.join("fit.json"));
    let se = fit["std_errors"].as_array().unwrap();
    for (name, truth, k) in [("a", 0.25, 0), ("b", 0.03, 1), ("c", 0.2, 2)] {
        let v = fit[name].as_f64().unwrap();
        assert!((v - truth).abs() <= 2.0 * se[k].as_f64().unwrap(), "{name} = {v}");
    }
    assert!(fit["r_squared"].as_f64().unwrap() > 0.93);
    assert_eq!(fit["converged"], true);
    let r = json(&out.join("resolved_config.json"));
    assert_eq!(r["settings"]["extraction"]["n_resamples"], 100);
    assert_eq!(r["settings"]["extraction"]["window_halfwidth"], 5);
    assert_schema_headers(&out);
}

#[test]
fn iv_skips_unreadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert!(qdiode(&corpus, &["synth-iv"]).status.success());
    let mpath = corpus.join("manifest.json");
    let mut m = json(&mpath);
    m["traces"].as_array_mut().unwrap()[0]["file"] = Value::from("does_not_exist.csv");
    std::fs::write(&mpath, serde_json::to_string(&m).unwrap()).unwrap();
    let out = dir.path().join("out");
    let o = qdiode(&out, &["iv", "--manifest", mpath.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does_not_exist.csv"));
    assert!(stdout(&o).contains("points=40 skipped_fields=0 unreadable_files=1"));
    assert_eq!(json(&out.join("fit.json"))["unreadable_files"].as_array().unwrap().len(), 1);
}

#[test]
fn iv_with_too_few_fields_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert!(qdiode(&corpus, &["synth-iv"]).status.success());
    let mpath = corpus.join("manifest.json");
    let mut m = json(&mpath);
    m["traces"].as_array_mut().unwrap().truncate(3);
    std::fs::write(&mpath, serde_json::to_string(&m).unwrap()).unwrap();
    let o = qdiode(&dir.path().join("out"), &["iv", "--manifest", mpath.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(dir.path().join("out/efficiency_series.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qdiode"))
        .args(["cpr", "--eta", "0.1"])
        .env("QDIODE_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("cpr_table.csv").exists());
    assert!(dir.path().join("resolved_config.json").exists());
}
