use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_influence"))
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn close(a: &Value, b: f64) -> bool {
    (a.as_f64().unwrap() - b).abs() < 1e-9
}

const CNOT: &str = r#"{
  "process": {"n": 2, "layers": [{"kind": "CNOT", "qubits": [1, 2]}]},
  "subsets": [[1], [2], [1, 2]],
  "shots": 20000
}"#;

#[test]
fn exact_cnot_influences() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", CNOT);
    let env = json(&run(&["exact"], &cfg));
    assert_eq!(env["schema_version"], 1);
    assert_eq!(env["command"], "exact");
    let rows = env["results"]["subsets"].as_array().unwrap();
    let inf: Vec<f64> = rows.iter().map(|r| r["influence"].as_f64().unwrap()).collect();
    for (got, want) in inf.iter().zip([0.5, 0.5, 0.75]) {
        assert!((got - want).abs() < 1e-9, "{inf:?}");
    }
    // EX_1 on the control is zero; EX_2 on the target is zero.
    assert!(close(&rows[0]["samplers"][0], 0.0));
    assert!(close(&rows[1]["samplers"][1], 0.0));
}

#[test]
fn exact_rx_half_pi() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "rx.json",
        r#"{"process": {"n": 1, "layers": [{"kind": "RX", "qubits": [1], "params": {"theta": 1.5707963267948966}}]}}"#,
    );
    let env = json(&run(&["exact"], &cfg));
    let row = &env["results"]["subsets"][0];
    assert!(close(&row["influence"], 0.5));
    assert!(close(&row["samplers"][1], 0.0));
}

#[test]
fn rz_sweep_follows_sin_squared() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "sw.json",
        r#"{"process": {"n": 1, "layers": [{"kind": "RZ", "qubits": [1], "params": {"theta": 0}}]},
            "sweep": {"parameter": "theta", "start": 0, "stop": 3.141592653589793, "steps": 9}}"#,
    );
    let env = json(&run(&["sweep"], &cfg));
    let points = env["results"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 9);
    for p in points {
        let theta = p["value"].as_f64().unwrap();
        assert!(close(&p["influence"], (theta / 2.0).sin().powi(2)));
        // Z errors are invisible to the identity test gate.
        assert!(close(&p["samplers"][0], 0.0));
    }
}

#[test]
fn sampled_sweep_reports_z_scores() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "sw.json",
        r#"{"process": {"n": 1, "layers": [{"kind": "RZ", "qubits": [1], "params": {"theta": 0}}]},
            "seed": 3, "shots": 30000, "gates": "3",
            "sweep": {"parameter": "theta", "values": [0.5, 1.0, 2.0], "sampled": true}}"#,
    );
    let env = json(&run(&["sweep"], &cfg));
    for p in env["results"]["points"].as_array().unwrap() {
        for c in p["sampled"]["cross_check"].as_array().unwrap() {
            if let Some(z) = c["z"].as_f64() {
                assert!(z.abs() < 5.0, "{c}");
            }
        }
    }
}

#[test]
fn sampling_is_deterministic_and_worker_independent() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", CNOT);
    let a = json(&run(&["sample", "--seed", "11", "--workers", "1"], &cfg));
    let b = json(&run(&["sample", "--seed", "11", "--workers", "4"], &cfg));
    let c = json(&run(&["sample", "--seed", "12", "--workers", "1"], &cfg));
    assert_eq!(a["results"], b["results"]);
    assert_ne!(a["results"], c["results"]);
    assert_eq!(a["provenance"]["seed"], 11);
    assert_eq!(b["provenance"]["workers"], 4);
}

#[test]
fn cross_check_agrees_with_exact_samplers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"process": {"n": 3, "layers": [{"kind": "CUS", "qubits": [2, 1]}]},
            "noise": {"qubits": [2]}, "seed": 21, "shots": 60000, "gates": "3", "cross_check": true}"#,
    );
    let env = json(&run(&["sample"], &cfg));
    let checks = env["results"]["cross_check"].as_array().unwrap();
    assert_eq!(checks.len(), 9);
    for c in checks {
        if let Some(z) = c["z"].as_f64() {
            assert!(z.abs() < 4.5, "{c}");
        }
    }
}

#[test]
fn csv_output_writes_envelope_sidecar() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", CNOT);
    let out = dir.path().join("exact.csv");
    let status = run(&["exact", "--format", "csv", "--out", out.to_str().unwrap()], &cfg);
    assert!(status.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "subset,influence,ex1,ex2,ex3,il,iu,il3,iu3");
    assert!(lines.next().unwrap().starts_with("1,0.5,"));
    let env: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("exact.csv.json")).unwrap()).unwrap();
    assert_eq!(env["command"], "exact");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let cnot = write_config(&dir, "c.json", CNOT);
    let unknown = write_config(&dir, "u.json", r#"{"process": {"n": 2}, "seeds": 1}"#);
    let big = write_config(&dir, "b.json", r#"{"process": {"n": 9, "layers": [{"kind": "H", "qubits": [9]}]}}"#);
    let bad_gate = write_config(&dir, "g.json", r#"{"process": {"n": 2, "layers": [{"kind": "CNOT", "qubits": [1, 1]}]}}"#);
    let code = |o: Output| o.status.code().unwrap();
    // Sampling commands refuse to pick a seed.
    assert_eq!(code(run(&["sample"], &cnot)), 2);
    assert_eq!(code(run(&["hiqi"], &cnot)), 2);
    assert_eq!(code(run(&["exact"], &unknown)), 2);
    assert_eq!(code(run(&["exact"], &bad_gate)), 2);
    assert_eq!(code(run(&["junta-test", "--seed", "1"], &cnot)), 2, "k is required");
    assert_eq!(code(run(&["exact", "--gates", "7"], &cnot)), 2);
    assert_eq!(code(bin().arg("exact").output().unwrap()), 2, "config is required");
    assert_eq!(code(run(&["exact"], &big)), 4);
    assert_eq!(code(run(&["sample", "--seed", "1", "--gates", "rand1"], &write_config(&dir, "x.json", &CNOT.replace("\"shots\"", "\"cross_check\": true, \"shots\"")))), 3);
}

#[test]
fn junta_test_verdicts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "t.json",
        r#"{"process": {"n": 6, "layers": [{"kind": "CNOT", "qubits": [2, 1]}]}, "seed": 4, "shots": 40000}"#,
    );
    let yes = json(&run(&["junta-test", "--marginals-only"], &write_config(&dir, "k2.json", &cfg_with_k(&cfg, 2))));
    assert_eq!(yes["results"]["verdict"]["verdict"], "YES");
    assert_eq!(yes["results"]["verdict"]["t"]["qubits"], serde_json::json!([1, 2]));
    assert!(yes["results"]["verdict"]["epsilon"]["value"].as_f64().unwrap() < 1e-9);
    let no = json(&run(&["junta-test"], &write_config(&dir, "k1.json", &cfg_with_k(&cfg, 1))));
    assert_eq!(no["results"]["verdict"]["verdict"], "NO");
    assert!(no["results"]["verdict"]["epsilon"].is_null());
}

fn cfg_with_k(path: &Path, k: usize) -> String {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["k"] = k.into();
    v.to_string()
}

#[test]
fn hiqi_on_24_qubits_with_marginals() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "h.json",
        r#"{"process": {"n": 24, "layers": [
              {"kind": "CTRL_PHASE_DAMP", "qubits": [6, 5], "params": {"lambda": 1}},
              {"kind": "CZ", "qubits": [14, 13]}]},
            "noise": {"qubits": [2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24]},
            "seed": 24, "shots": 260000, "gates": "3", "marginals_only": true}"#,
    );
    let env = json(&run(&["hiqi", "--format", "json"], &cfg));
    assert_eq!(env["results"]["hiqi"]["t"]["qubits"], serde_json::json!([5, 6, 13, 14]));
    assert_eq!(env["results"]["hiqi"]["mode"], "marginal");
}

#[test]
fn junta_learn_reconstructs_cnot() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "l.json",
        r#"{"process": {"n": 4, "layers": [{"kind": "CNOT", "qubits": [2, 1]}]},
            "seed": 8, "shots": 20000, "shots_per_setting": 2000}"#,
    );
    let env = json(&run(&["junta-learn"], &cfg));
    let r = &env["results"];
    assert_eq!(r["t"]["qubits"], serde_json::json!([1, 2]));
    let rec = &r["reconstruction"];
    assert!(rec["min_eigenvalue"].as_f64().unwrap() > -1e-9);
    assert!(rec["fidelity_to_reference"].as_f64().unwrap() > 0.95);
    let total = r["total_bound"].as_f64().unwrap();
    assert!(total > 0.0 && total < 0.3, "{total}");
}
