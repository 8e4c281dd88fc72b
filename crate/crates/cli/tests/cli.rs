use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rigiditylab"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn cohomology_of_sign_rep() {
    let out = run(&["cohomology", scenario("z2_sign_cohomology.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["results"]["h0"], 0);
    assert_eq!(r["results"]["h1"], 0);
    assert_eq!(r["task"], "cohomology");
}

#[test]
fn torus_from_phase_flag() {
    let out = run(&["torus", "--phase", "0.6,0.8", "--weight-bound", "1", "--alpha", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let eps = json(&out)["results"]["epsilon"].as_f64().unwrap();
    assert!((eps - 2.0 / 5f64.sqrt()).abs() <= 1e-12);
}

#[test]
fn malformed_json_exits_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"task\": \"cohomology\", ").unwrap();
    let out = run(&["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    std::fs::write(&bad, r#"{"task":"cohomology","presentation":{"generators":1,"relators":[[1,"a"]]}}"#).unwrap();
    let out = run(&["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("presentation.relators"));
}

#[test]
fn task_mismatch_is_validation_error() {
    let out = run(&["split", scenario("z2_sign_cohomology.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn log_cutoff_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("far.json");
    std::fs::write(
        &path,
        r#"{"task":"rigidity-solve","presentation":{"generators":1,"relators":[[1,1,1,1,1]]},
            "rep":{"kind":"matrices","matrices":[[[[0.30901699437494745,0.9510565162951535]]]]},
            "target":{"kind":"matrices","matrices":[[[[-0.30901699437494745,-0.9510565162951535]]]]}}"#,
    )
    .unwrap();
    let out = run(&["rigidity", "solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
}

#[test]
fn planted_solve_converges() {
    let out = run(&["rigidity", "solve", scenario("z5_planted_solve.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["results"]["converged"], true);
    assert!(r["results"]["conjugation_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn net_csv_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("net.csv");
    let report = dir.path().join("net.json");
    let out = run(&[
        "net",
        "--radius",
        "3",
        "--probe-size",
        "5000",
        "--csv",
        csv.to_str().unwrap(),
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let table = std::fs::read_to_string(csv).unwrap();
    assert!(table.starts_with("n,ball,eps\n"));
    assert_eq!(table.lines().count(), 5);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(r["params"]["radius"], 3);
}

#[test]
fn cohomology_csv_is_warning_only() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let out = run(&["run", scenario("z2_sign_cohomology.json").to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!csv.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn gap_sweep_default_rotations() {
    let out = run(&["gap", "sweep", "--max-spin", "3", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["results"]["entries"].as_array().unwrap().len(), 6);
    assert!(r["results"]["epsilon0"].as_f64().unwrap() > 0.0);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let path = scenario("su2_tame_probe.json");
    let a = run(&["tame", "probe", path.to_str().unwrap()]);
    let b = bin().args(["tame", "probe", path.to_str().unwrap()]).env("RIGIDITYLAB_THREADS", "3").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["tame", "probe", path.to_str().unwrap(), "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn timing_is_opt_in() {
    let path = scenario("averaging_i.json");
    let plain = json(&run(&["averaging", path.to_str().unwrap()]));
    assert!(plain.get("timing_ms").is_none());
    let timed = json(&run(&["averaging", path.to_str().unwrap(), "--timing"]));
    assert!(timed["timing_ms"].as_f64().is_some());
}
