use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_saatrace");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const X3: &str = "%%MatrixMarket matrix coordinate real symmetric\n3 3 5\n1 1 1\n2 1 0.5\n3 1 -0.25\n2 2 2\n3 3 3.5\n";

#[test]
fn certify_finite_hoeffding_example() {
    let v = json(&run(&[
        "certify", "--bound", "finite-hoeffding", "--eps", "0.1", "--delta", "0.05", "--alpha-m", "1", "--card", "10",
    ]));
    assert_eq!(v["schema"], "saatrace/1");
    assert_eq!(v["command"], "certify");
    let cert = &v["result"]["certificate"];
    assert_eq!(cert["n"], 4239);
    assert_eq!(cert["family"], "finite-hoeffding");
    assert!(!cert["formulaTrace"].as_array().unwrap().is_empty());
}

#[test]
fn sphere_range_violation_exits_two() {
    // 12 m L2 B = 12 · 5 · 1 · (1/6) = 10.
    let out = run(&[
        "certify", "--bound", "sphere-hoeffding", "--eps", "20", "--delta", "0.1", "--alpha-m", "1", "--m", "5",
        "--lipschitz", "l2=1", "--K", "2", "--B", "0.16666666666666666",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sphere-hoeffding") && err.contains("eps < 12 m L2 B"), "{err}");
}

#[test]
fn chain_mixed_delta_violation_exits_two() {
    let out = run(&[
        "certify", "--bound", "chain-mixed", "--eps", "0.1", "--delta", "0.6", "--alpha-f", "1", "--alpha-2", "1",
        "--gamma2-df", "1", "--gamma1-d2", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("chain-mixed"));
}

#[test]
fn other_failures_exit_one() {
    let out = run(&["certify", "--bound", "finite-hoeffding", "--eps", "0.1", "--delta", "0.05", "--card", "10"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["oracle", "--matrix", "/nonexistent/x.mtx", "--n", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_are_rejected() {
    assert!(!run(&["certify", "--epsilon", "0.1"]).status.success());
    assert!(!run(&["optimize", "--family", "synthetic-dense", "--m", "3", "--K", "1", "--B", "1", "--n", "5"]).status.success());
    assert!(!run(&["validate", "--n", "5", "--eps", "0.1", "--delta", "0.1"]).status.success());
}

#[test]
fn oracle_mean_equals_trace() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.mtx", X3);
    let out = run(&["oracle", "--matrix", s(&x), "--n", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value,probability,count"));
    let (mut mean, mut total, mut count) = (0.0, 0.0, 0u64);
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (v, p): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        mean += v * p;
        total += p;
        count += f[2].parse::<u64>().unwrap();
    }
    assert_eq!(count, 64);
    assert!((total - 1.0).abs() < 1e-12);
    assert!((mean - 6.5).abs() < 1e-12, "{mean}");
}

#[test]
fn oracle_json_reports_tails() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.mtx", X3);
    let v = json(&run(&["oracle", "--matrix", s(&x), "--n", "2", "--format", "json", "--t", "0.5,1"]));
    let r = &v["result"];
    assert_eq!(r["trace"], 6.5);
    let tails = r["tails"].as_array().unwrap();
    assert_eq!(tails.len(), 2);
    for t in tails {
        assert!(t["exactGreater"].as_f64().unwrap() <= t["exactAtLeast"].as_f64().unwrap());
        assert!(t["exactAtLeast"].as_f64().unwrap() <= t["mixed"].as_f64().unwrap());
    }
    let var = r["variance"].as_f64().unwrap();
    assert!((var - r["predictedVariance"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn replay_reproduces_every_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["--bound", "finite-hoeffding", "--alpha-m", "1.7", "--card", "1000"],
        &["--bound", "finite-mixed", "--alpha-f", "0.3", "--alpha-2", "0.2", "--alpha-m", "2", "--ln-card", "50.5"],
        &["--bound", "net-hoeffding", "--alpha-m", "1", "--m", "4", "--lipschitz", "l2=2", "--K", "3", "--B", "1.5"],
        &["--bound", "net-mixed", "--alpha-f", "1", "--alpha-2", "0.5", "--m", "4", "--lipschitz", "l2=2", "--K", "3", "--B", "1.5"],
        &["--bound", "sphere-hoeffding", "--alpha-m", "1", "--m", "4", "--lipschitz", "l2=2", "--K", "3", "--B", "1.5"],
        &["--bound", "sphere-mixed", "--alpha-f", "1", "--alpha-2", "0.5", "--m", "4", "--lipschitz", "l2=2", "--K", "3", "--B", "1.5"],
        &["--bound", "chain-subgauss", "--alpha-m", "1", "--gamma2-dm", "2.5"],
        &["--bound", "chain-mixed", "--alpha-f", "1", "--alpha-2", "0.5", "--lipschitz", "l2=1,lf=2,lm=3", "--K", "2", "--B", "1", "--const-dudley", "0.7"],
        &["--bound", "sphere-chain-subgauss", "--alpha-m", "1", "--lipschitz", "lm=3", "--K", "2", "--B", "1"],
        &["--bound", "sphere-chain-mixed", "--alpha-f", "1", "--alpha-2", "0.5", "--lipschitz", "l2=1,lf=2", "--K", "2", "--B", "1", "--const-c", "100"],
    ];
    for (i, case) in cases.iter().enumerate() {
        let cert_path = dir.path().join(format!("c{i}.json"));
        let mut args = vec!["certify", "--eps", "0.3", "--delta", "0.05", "--out", s(&cert_path)];
        args.extend_from_slice(case);
        let out = run(&args);
        assert!(out.status.success(), "{case:?}: {}", String::from_utf8_lossy(&out.stderr));
        let original: Value = serde_json::from_str(&std::fs::read_to_string(&cert_path).unwrap()).unwrap();
        let v = json(&run(&["certify", "--replay", s(&cert_path)]));
        assert_eq!(v["result"]["replay"]["reproduced"], true, "{case:?}");
        assert_eq!(v["result"]["certificate"], original["result"]["certificate"], "{case:?}");
    }

    // A tampered certificate no longer replays.
    let path = dir.path().join("c0.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    v["result"]["certificate"]["n"] = Value::from(7);
    std::fs::write(&path, v.to_string()).unwrap();
    let out = run(&["certify", "--replay", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn optimize_output_replays() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("opt.json");
    let out = run(&[
        "optimize", "--family", "synthetic-diagdom", "--m", "4", "--K", "2", "--B", "1", "--seed", "3", "--bound",
        "sphere-hoeffding", "--eps", "0.5", "--delta", "0.1", "--net-eta", "0.25", "--out", s(&path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let r = &v["result"];
    assert_eq!(r["facts"]["lipschitz"]["certified"], true);
    assert_eq!(r["result"]["reference"], "best-known-lower-bound");
    assert!(r["result"]["backwardError"].as_f64().unwrap() >= 0.0);
    assert!(r["result"]["evaluations"].as_u64().unwrap() > 0);
    let replay = json(&run(&["certify", "--replay", s(&path)]));
    assert_eq!(replay["result"]["replay"]["reproduced"], true);
    assert_eq!(replay["result"]["certificate"]["n"], r["n"]);
}

#[test]
fn config_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "eps = 0.2\ndelta = 0.05\n[certify]\nbound = \"finite-hoeffding\"\nalpha-m = 1\ncard = 10\n",
    );
    let from_config = json(&run(&["certify", "--config", s(&cfg)]));
    let n_config = from_config["result"]["certificate"]["n"].as_u64().unwrap();
    let overridden = json(&run(&["certify", "--config", s(&cfg), "--eps", "0.1"]));
    assert_eq!(overridden["result"]["certificate"]["n"], 4239);
    assert!(n_config < 4239);

    let bad = write(dir.path(), "bad.toml", "epsilon = 0.1\n");
    assert!(!run(&["certify", "--config", s(&bad)]).status.success());
}

#[test]
fn bank_file_reproduces_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.mtx", X3);
    let bank = dir.path().join("b.rbnk");
    let a = json(&run(&["estimate", "--matrix", s(&x), "--n", "37", "--seed", "11", "--bank-out", s(&bank)]));
    let bytes = std::fs::read(&bank).unwrap();
    assert_eq!(&bytes[..5], b"RBNK\x01");
    assert_eq!(bytes.len(), 21 + (37 * 3usize).div_ceil(8));
    let b = json(&run(&["estimate", "--matrix", s(&x), "--bank", s(&bank)]));
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn estimate_from_family_point() {
    let v = json(&run(&[
        "estimate", "--family", "synthetic-dense", "--m", "5", "--K", "2", "--B", "1", "--theta", "0.5,-0.25", "--n",
        "1000", "--seed", "1",
    ]));
    let r = &v["result"];
    assert_eq!(r["m"], 5);
    let err = r["error"].as_f64().unwrap();
    assert!(err.abs() < 6.0 * r["variance"].as_f64().unwrap().sqrt());
}

#[test]
fn validate_writes_trial_log_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let space = write(dir.path(), "space.csv", "t\n0\n1\n2\n");
    let mats: Vec<PathBuf> = (0..3)
        .map(|i| {
            let text = format!(
                "%%MatrixMarket matrix array real symmetric\n2 2\n{}\n0.3\n1\n",
                1.0 + 0.2 * i as f64
            );
            write(dir.path(), &format!("a{i}.mtx"), &text)
        })
        .collect();
    let list = mats.iter().map(|p| s(p)).collect::<Vec<_>>().join(",");
    let log = dir.path().join("trials.csv");
    let args = [
        "validate", "--family", "list", "--matrices", &list, "--space-file", s(&space), "--seed", "5", "--n", "4",
        "--eps", "0.1", "--delta", "0.2", "--trials", "40", "--log", s(&log),
    ];
    let a = run(&args);
    let mut threaded: Vec<&str> = vec!["--threads", "2"];
    threaded.extend_from_slice(&args);
    let b = run(&threaded);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let rep = &v["result"]["report"];
    assert_eq!(rep["trials"], 40);
    assert_eq!(rep["reference"], "exact-minimum");
    let text = std::fs::read_to_string(&log).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,seed,thetaHatIndex,backwardError,fail"));
    let fails = lines.filter(|l| l.ends_with(",1")).count();
    assert_eq!(rep["failures"].as_u64().unwrap() as usize, fails);
}

#[test]
fn oed_and_hyper_run() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "g.mtx",
        "%%MatrixMarket matrix array real general\n2 4\n1\n0\n0\n1\n0.5\n0.5\n2\n-1\n",
    );
    let v = json(&run(&[
        "oed", "--g", s(&g), "--k", "2", "--greedy", "--seed", "1", "--bound", "finite-mixed", "--eps", "0.5", "--delta",
        "0.1",
    ]));
    let r = &v["result"];
    assert_eq!(r["designs"], 6);
    assert_eq!(r["cardinality"]["exact"], 6);
    let opt = &r["optimum"];
    assert!((opt["objective"].as_f64().unwrap() + opt["logDet"].as_f64().unwrap()).abs() < 1e-9);
    assert!(r["saa"]["backwardError"].as_f64().unwrap() >= 0.0);

    let f = write(
        dir.path(),
        "f.mtx",
        "%%MatrixMarket matrix array real general\n3 2\n1\n0.5\n-1\n0.2\n1\n0.3\n",
    );
    let gamma0 = write(dir.path(), "g0.mtx", "%%MatrixMarket matrix array real symmetric\n2 2\n1\n0.1\n1\n");
    let d = write(dir.path(), "d.txt", "0.3\n-0.2\n1.1\n");
    let mu0 = write(dir.path(), "mu0.txt", "0.5\n-0.5\n");
    let v = json(&run(&[
        "hyper", "--forward", s(&f), "--data", s(&d), "--gamma0", s(&gamma0), "--mu0", s(&mu0), "--sigma", "0.5",
        "--theta-min", "0.2", "--B", "0.5", "--center", "1,0.5", "--seed", "4", "--n", "30",
    ]));
    let r = &v["result"]["result"];
    assert!(r["thetaHat"][0].as_f64().unwrap() >= 0.2);
    assert_eq!(v["result"]["facts"]["lipschitz"]["certified"], false);
}
