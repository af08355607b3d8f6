use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oracle-synth"))
        .args(args)
        .env_remove("ORACLE_SYNTH_SEED")
        .output()
        .expect("binary runs")
}

fn gen(dir: &tempfile::TempDir, n: usize, m: usize) -> String {
    let path = dir.path().join("f.cnf");
    let p = path.to_str().unwrap().to_string();
    let out = run(&["gen", "-n", &n.to_string(), "-m", &m.to_string(), "-k", "3", "--seed", "5", "-o", &p]);
    assert!(out.status.success());
    p
}

#[test]
fn synth_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = gen(&dir, 7, 30);
    let qasm = dir.path().join("f.qasm");
    let report = dir.path().join("f.json");
    for mode in ["size", "depth"] {
        let out = run(&[
            "synth",
            "-i",
            &cnf,
            "--ancillas",
            "6",
            "--mode",
            mode,
            "-o",
            qasm.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--verify",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let cost: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert!(cost["cost"]["size"].as_u64().unwrap() > 0);
        let out = run(&["verify", "-i", &cnf, "-c", qasm.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(rep["states_checked"].as_u64(), Some(256));
    }
}

#[test]
fn verify_rejects_wrong_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = gen(&dir, 4, 12);
    let qasm = dir.path().join("bad.qasm");
    fs::write(&qasm, "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg in[4];\nqreg anc[3];\nqreg tgt[1];\nx tgt[0];\n")
        .unwrap();
    let out = run(&["verify", "-i", &cnf, "-c", qasm.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn infeasible_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = gen(&dir, 5, 20);
    let out = run(&["synth", "-i", &cnf, "--ancillas", "2", "--mode", "size"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires ℓ ≥ 3"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["synth", "--mode", "size"]).status.code(), Some(2));
    assert_eq!(run(&["synth", "--ancillas", "4", "--mode", "fast"]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = gen(&dir, 6, 25);
    let a = run(&["synth", "-i", &cnf, "--ancillas", "5", "--lower", "approx"]);
    let b = run(&["synth", "-i", &cnf, "--ancillas", "5", "--lower", "approx"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("OPENQASM 2.0;"));
    let g1 = run(&["gen", "-n", "10", "-m", "43", "-k", "3", "--seed", "9"]);
    let g2 = run(&["gen", "-n", "10", "-m", "43", "-k", "3", "--seed", "9"]);
    assert_eq!(g1.stdout, g2.stdout);
}

#[test]
fn bench_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"k": 3, "n": [5], "ensemble": 2, "ell": [3, 6], "seed": 1}"#).unwrap();
    let csv = dir.path().join("out.csv");
    let out = run(&["bench", "--spec", spec.to_str().unwrap(), "-o", csv.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# seed=1 config_hash="));
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("3,5,21,3,size,"));
    assert!(dir.path().join("out.json").exists());
}

#[test]
fn grover_estimate_json() {
    let out = run(&["estimate-grover", "-k", "3", "-n", "12", "-m", "51", "--ancillas", "20"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rounds"].as_u64(), Some(50));
    let one = v["one_round_size"].as_u64().unwrap();
    assert_eq!(v["full_round_size"].as_u64(), Some(50 * one));
}
