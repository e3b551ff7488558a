use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ionqec::state::StateVector;

fn ionqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionqec")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn storage_run(config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["storage-experiment", "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ionqec(&args)
}

#[test]
fn storage_experiment_writes_the_layout_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"scheme": "FourierSymmetrized", "t_max": 4.0, "trajectories": 50, "seed": 1, "grid": 41}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(storage_run(&cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(storage_run(&cfg, &b, &[]).status.code(), Some(0));
    for file in ["config.json", "timeline_corrected.csv", "timeline_uncorrected.csv", "summary.json"] {
        let (x, y) = (fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap());
        assert_eq!(x, y, "{file} differs");
    }
    let csv = fs::read_to_string(a.join("timeline_corrected.csv")).unwrap();
    assert!(csv.starts_with("time,mean_fidelity,stderr_fidelity,jump_rate\n"));
    assert_eq!(csv.lines().count(), 42);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    for key in ["trajectories", "total_jumps", "missed_jumps", "correction_failures"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"scheme": "FourierSymmetrized", "t_max": 2.0, "trajectories": 20, "seed": 1, "grid": 5}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    storage_run(&cfg, &a, &["--seed", "99"]);
    storage_run(&cfg, &b, &[]);
    let echo: serde_json::Value = serde_json::from_slice(&fs::read(a.join("config.json")).unwrap()).unwrap();
    assert_eq!(echo["seed"], 99);
    assert_ne!(
        fs::read(a.join("timeline_uncorrected.csv")).unwrap(),
        fs::read(b.join("timeline_uncorrected.csv")).unwrap()
    );
}

#[test]
fn single_trajectory_runs_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"scheme": "NumberStateSymmetrized", "n_logical": 2, "t_max": 5.0, "trajectories": 1, "seed": 42}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    storage_run(&cfg, &a, &[]);
    storage_run(&cfg, &b, &[]);
    assert_eq!(fs::read(a.join("summary.json")).unwrap(), fs::read(b.join("summary.json")).unwrap());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write(dir.path(), "bad.json", r#"{"scheme": "FourierSymmetrized", "t_max": 1.0, "trajectories": 0}"#);
    assert_eq!(storage_run(&bad, &out, &[]).status.code(), Some(2));
    assert!(!out.exists(), "nothing is written before validation");
    let garbage = write(dir.path(), "garbage.json", "{not json");
    assert_eq!(storage_run(&garbage, &out, &[]).status.code(), Some(2));
    assert_eq!(storage_run("/nonexistent/config.json", &out, &[]).status.code(), Some(2));
    assert_eq!(ionqec(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    let circuit = write(dir.path(), "c.json", r#"{"n_ions": 2, "steps": [{"cnot": {"control": 1, "target": 3}}]}"#);
    assert_eq!(ionqec(&["run-circuit", "--config", &circuit]).status.code(), Some(2));
}

#[test]
fn encode_dumps_a_codeword() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "enc.json",
        r#"{"scheme": "FourierSymmetrized", "logical": [[1.0, 0.0], [0.0, 0.0]]}"#,
    );
    let out = dir.path().join("out");
    let o = ionqec(&["encode", "--config", &cfg, "--out", out.to_str().unwrap(), "--dump-state"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let state: StateVector = serde_json::from_slice(&fs::read(out.join("state.json")).unwrap()).unwrap();
    assert_eq!(state.n_ions(), 5);
    // |0~0~> with complemented partners: four kets of weight 2, amplitude 1/2
    for k in [0b01100, 0b01001, 0b00110, 0b00011] {
        assert!((state.amplitude(k).re - 0.5).abs() < 1e-12);
    }
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("encode.json")).unwrap()).unwrap();
    assert_eq!(report["codeword"]["in_code_space"], true);
}

#[test]
fn plan_prints_steps_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "plan.json", r#"{"scheme": "FourierSymmetrized", "decayed_ion": 3}"#);
    let o = ionqec(&["plan", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let plan = &v["plans"][0];
    assert_eq!(plan["decayed_ion"], 3);
    assert_eq!(plan["gate_count"]["rotations"], 2);
    assert_eq!(plan["gate_count"]["cnots"], 5);
    assert_eq!(plan["steps"][0]["pulse"]["ion"], 3);
    assert!((plan["wall_time_s"].as_f64().unwrap() - 530e-6).abs() < 1e-15);
}

#[test]
fn run_circuit_applies_the_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"n_ions": 2, "steps": [
            {"pulse": {"ion": 1, "k": 3.141592653589793, "phi": -1.5707963267948966}},
            {"cnot": {"control": 1, "target": 2}}
        ]}"#,
    );
    let out = dir.path().join("out");
    let o = ionqec(&["run-circuit", "--config", &cfg, "--out", out.to_str().unwrap(), "--dump-state"]);
    assert_eq!(o.status.code(), Some(0));
    let state: StateVector = serde_json::from_slice(&fs::read(out.join("state.json")).unwrap()).unwrap();
    // pi pulse takes |0> to |1> on ion 1, the CNOT then flips ion 2
    assert!((state.amplitude(3).re - 1.0).abs() < 1e-12);
}

#[test]
fn verify_reports_and_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = ionqec(&["verify", "--suite", "counts", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report[0]["suite"], "counts");
    assert_eq!(report[0]["passed"], true);
    let statuses: Vec<&str> = report[0]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["status"].as_str().unwrap())
        .collect();
    assert!(statuses.contains(&"WARN"));
    assert!(!statuses.contains(&"FAIL"));
}

#[test]
fn property_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.json", r#"{"suite": "oracle", "trajectories": 2, "seed": 5}"#);
    let o = ionqec(&["verify", "--config", &cfg]);
    // two trajectories cannot reproduce a mixed state within three standard errors
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}
