use std::path::Path;
use std::process::{Command, Output};

fn qwalknet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalknet"))
        .args(args)
        .env_remove("QWALKNET_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_passes_clean_and_names_the_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ok");
    let o = qwalknet(&["verify", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let report = json(&out.join("verify_report.json"));
    assert_eq!(report["passed"], true);
    let eq = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "engine_equivalence_distribution").unwrap();
    assert!(eq["observed"].as_f64().unwrap() <= 1e-10);

    let bad = dir.path().join("bad");
    let o = qwalknet(&["verify", "--inject-fault", "--out", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL engine_equivalence_distribution"));
    assert_eq!(json(&bad.join("verify_report.json"))["passed"], false);
}

#[test]
fn exact_engine_refuses_large_rings() {
    let dir = tempfile::tempdir().unwrap();
    let o = qwalknet(&["simulate", "--engine", "exact", "-n", "12", "--out", path_str(dir.path())]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("dimension cap"), "{}", stderr(&o));
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        let o = qwalknet(&[
            "simulate", "-n", "9", "--alpha", "0.3", "--t-max", "60", "--negativity", "--threads", threads, "--out",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let read = |name: &str| std::fs::read(out.join(name)).unwrap();
        files.push(["distribution.csv", "entropy.csv", "negativity.csv", "distance.csv"].map(read));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn every_data_file_has_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = qwalknet(&["simulate", "-n", "5", "--alpha", "0.2", "--t-max", "10", "--out", path_str(dir.path())]);
    assert!(o.status.success());
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "csv") {
            let meta = json(&p.with_extension("csv.meta.json"));
            assert_eq!(meta["artifact_version"], env!("CARGO_PKG_VERSION"));
            assert_eq!(meta["config"]["n"], 5);
            assert_eq!(meta["log_base"], 2);
        }
    }
    let header = std::fs::read_to_string(dir.path().join("distribution.csv")).unwrap();
    assert!(header.starts_with("t,n,p\n"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n": 5, "alpha": 0.1, "t_max": 7, "entropy": false}"#).unwrap();
    let out = dir.path().join("out");
    let o = qwalknet(&["simulate", "--config", path_str(&cfg), "-n", "4", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = json(&out.join("distribution.csv.meta.json"));
    assert_eq!(meta["config"]["n"], 4);
    assert_eq!(meta["config"]["t_max"], 7);
    assert!(!out.join("entropy.csv").exists());
}

#[test]
fn config_errors_point_at_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{\n  \"n\": 5,\n  \"alhpa\": 0.1\n}\n").unwrap();
    let o = qwalknet(&["simulate", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn localized_walk_peaks_at_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n": 15, "alpha": 0.5, "t_max": 225, "entropy": false, "distance": false}"#).unwrap();
    let o = qwalknet(&["simulate", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("distribution.csv")).unwrap();
    let last: Vec<(i64, f64)> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0] == "225").then(|| (f[1].parse().unwrap(), f[2].parse().unwrap()))
        })
        .collect();
    assert_eq!(last.len(), 15);
    let best = last.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!(best.0.abs() <= 1, "{best:?}");
    let central: f64 = last.iter().filter(|(n, _)| n.abs() <= 1).map(|(_, p)| p).sum();
    assert!(central > 1.4 * 3.0 / 15.0, "{central}");
}

#[test]
fn stationary_sweep_and_uniform_ballistic_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = qwalknet(&["stationary", "-n", "9", "--alphas", "0,0.1,0.3,0.5", "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("stationary_N9_alpha0.csv")).unwrap();
    assert!(text.starts_with("n,pi\n"));
    for line in text.lines().skip(1) {
        let p: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((p - 1.0 / 9.0).abs() < 1e-10);
    }
    let meta = json(&dir.path().join("stationary_N9_alpha0.5.csv.meta.json"));
    assert_eq!(meta["extra"]["method"], "conditional");
    let rows = json(&dir.path().join("moments.json"));
    let pi0: Vec<f64> = rows.as_array().unwrap().iter().map(|r| r["pi0"].as_f64().unwrap()).collect();
    assert!(pi0.windows(2).all(|w| w[1] > w[0]), "{pi0:?}");
}

#[test]
fn estimate_round_trip_and_curve_reuse() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = qwalknet(&["estimate", "-n", "15", "--alpha", "0.3", "--seed", "5", "--out", path_str(&first)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let est = json(&first.join("estimate.json"));
    let a = est["estimate"]["alpha_hat"].as_f64().unwrap();
    assert!((0.25..=0.35).contains(&a), "{a}");
    assert_eq!(est["budget"]["direct_measurements"], 1_500_000);
    assert_eq!(est["budget"]["walk_measurements"], 10_000 * 300);

    let second = dir.path().join("second");
    let curve = first.join("reference_curve.csv");
    let o = qwalknet(&["estimate", "-n", "15", "--alpha", "0.3", "--seed", "5", "--curve", path_str(&curve), "--out", path_str(&second)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&second.join("estimate.json"))["estimate"], est["estimate"]);

    let o = qwalknet(&["estimate", "-n", "15", "--horizon", "100", "--curve", path_str(&curve), "--out", path_str(&second)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("horizon"), "{}", stderr(&o));
}

#[test]
fn heterogeneous_networks_warn() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n": 9, "sampler": {"mean_alpha": 0.25, "sigma_fraction": 0.8, "seed": 1}}"#).unwrap();
    let o = qwalknet(&["estimate", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("warning"));
    assert!(json(&dir.path().join("estimate.json"))["warning"].is_string());
}

#[test]
fn line_walk_and_fourier_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = qwalknet(&["dcqw", "--t-max", "50", "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("dcqw.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("50,")).count(), 101);

    let o = qwalknet(&["fourier", "-n", "4", "--config-index", "3", "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = json(&dir.path().join("fourier.json"));
    assert!(f["standard_walk"]["off_block_norm"].as_f64().unwrap() <= 1e-12);
    assert!(f["conditional_walk"]["off_block_norm"].as_f64().unwrap() > 0.1);
    assert!(!f["revivals_standard"].as_array().unwrap().is_empty());
}
