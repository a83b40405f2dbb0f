use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const GHZ3: &str = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\ncreg c[3];\nh q[0];\ncx q[0],q[1];\ncx q[1],q[2];\nmeasure q -> c;\n";

fn ccpart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccpart"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn gen(dir: &Path, family: &str, d: usize) -> PathBuf {
    let o = ccpart(&["gen", family, &d.to_string()]);
    assert!(o.status.success());
    write(
        dir,
        &format!("{family}{d}.qasm"),
        std::str::from_utf8(&o.stdout).unwrap(),
    )
}

#[test]
fn partition_ghz3() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ghz3.qasm", GHZ3);
    let tree_path = dir.path().join("tree.json");
    let o = ccpart(&[
        "partition",
        f.to_str().unwrap(),
        "--hierarchy",
        "2",
        "--dump-tree",
        tree_path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["leaves"], 2);
    assert_eq!(v["boundaries"], 1);
    assert_eq!(v["exchanges"], 1);
    assert!(v["partition_seconds"].as_f64().unwrap() >= 0.0);
    let tree: Value = serde_json::from_str(&std::fs::read_to_string(tree_path).unwrap()).unwrap();
    assert_eq!(tree["children"][0]["global_dims"], serde_json::json!([2]));
    assert_eq!(tree["children"][1]["global_dims"], serde_json::json!([0]));
}

#[test]
fn partition_empty_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "empty.qasm", "OPENQASM 2.0;\nqreg q[2];\n");
    let o = ccpart(&["partition", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["partitions"], 0);
}

#[test]
fn run_ghz3_verify_text() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ghz3.qasm", GHZ3);
    let o = ccpart(&[
        "run",
        f.to_str().unwrap(),
        "--ranks",
        "2",
        "--verify",
        "--format",
        "text",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("< 1e-10, OK"), "{text}");
}

#[test]
fn run_dj12_verify() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "dj", 12);
    let o = ccpart(&["run", f.to_str().unwrap(), "--ranks", "4", "--verify"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verify"]["ok"], true);
    assert!(v["verify"]["max_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn run_histogram_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "qft", 10);
    let args = [
        "run",
        f.to_str().unwrap(),
        "--ranks",
        "8",
        "--shots",
        "1000",
        "--seed",
        "7",
    ];
    let a = ccpart(&args);
    let b = ccpart(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let total: u64 = v["histogram"]
        .as_object()
        .unwrap()
        .values()
        .map(|x| x.as_u64().unwrap())
        .sum();
    assert_eq!(total, 1000);
    assert!(v["histogram"].as_object().unwrap().keys().all(|k| k.len() == 10));
    let other = ccpart(&[
        "run",
        f.to_str().unwrap(),
        "--ranks",
        "8",
        "--shots",
        "1000",
        "--seed",
        "8",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn run_writes_out_and_plan() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ghz3.qasm", GHZ3);
    let out = dir.path().join("out.json");
    let plan = dir.path().join("plan.json");
    let o = ccpart(&[
        "run",
        f.to_str().unwrap(),
        "--hierarchy",
        "2",
        "--dump-plan",
        plan.to_str().unwrap(),
        "--dump-state",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["state"].as_array().unwrap().len(), 8);
    let p: Value = serde_json::from_str(&std::fs::read_to_string(plan).unwrap()).unwrap();
    assert_eq!(p["version"], 1);
    let kinds: Vec<&str> = p["tasks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["kind"].as_str().unwrap())
        .collect();
    assert_eq!(
        kinds,
        [
            "Alloc",
            "ApplyFused",
            "Pack",
            "Exchange",
            "Unpack",
            "ApplyFused",
            "Free"
        ]
    );
}

#[test]
fn stats_examples() {
    let dir = tempfile::tempdir().unwrap();
    let ghz = write(dir.path(), "ghz3.qasm", GHZ3);
    let v = json(&ccpart(&["stats", ghz.to_str().unwrap(), "--ranks", "2"]));
    assert_eq!(v["exchanges"].as_array().unwrap().len(), 1);
    // one rank pair, each side sends 2^(d-g-1) amplitudes
    assert_eq!(v["exchanges"][0]["amplitudes_per_pair"], 2);
    assert_eq!(v["exchanges"][0]["rank_pairs"], 1);

    let diag = write(
        dir.path(),
        "diag.qasm",
        "qreg q[4]; rz(0.3) q[0]; cp(0.2) q[0],q[3]; cz q[1],q[2]; p(1) q[3];",
    );
    let v = json(&ccpart(&["stats", diag.to_str().unwrap(), "--ranks", "4"]));
    assert_eq!(v["bytes_moved"], 0);

    let v = json(&ccpart(&["stats", ghz.to_str().unwrap()]));
    assert_eq!(v["g"], 0);
    assert_eq!(v["exchange_seconds"], 0.0);
}

#[test]
fn bench_small_verified() {
    let o = ccpart(&[
        "bench", "--family", "ghz", "--qubits", "4..12", "--verify", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = json(&o);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r["ok"] == true));
}

#[test]
fn bench_partition_only_large() {
    let o = ccpart(&["bench", "--family", "qft", "--qubits", "30..32", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    for r in json(&o).as_array().unwrap() {
        assert!(r["partition_seconds"].as_f64().unwrap() < 5.0);
        assert!(r["max_deviation"].is_null());
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.qasm", "qreg q[2];\nfoo q[0];\n");
    let o = ccpart(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:1"));

    let swap = write(dir.path(), "swap.qasm", "qreg q[3]; swap q[0],q[2];");
    assert_eq!(
        ccpart(&["partition", swap.to_str().unwrap(), "--hierarchy", "1"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        ccpart(&["partition", swap.to_str().unwrap(), "--hierarchy", "2,3"])
            .status
            .code(),
        Some(3)
    );

    assert_eq!(ccpart(&["bench", "--family", "nope"]).status.code(), Some(2));
    assert_eq!(
        ccpart(&["run", swap.to_str().unwrap(), "--ranks", "3"]).status.code(),
        Some(1)
    );
    assert_eq!(ccpart(&["--help"]).status.code(), Some(0));
}

#[test]
fn stdin_input() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_ccpart"))
        .args(["run", "-", "--verify"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(GHZ3.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verify"]["ok"], true);
}
