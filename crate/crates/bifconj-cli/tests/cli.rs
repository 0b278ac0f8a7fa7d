//! End-to-end tests of the `bifconj` binary: output formats, exit codes,
//! determinism, and input validation, all through the real executable.

use std::path::Path;
use std::process::{Command, Output};

fn bifconj() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bifconj"))
}

fn run(args: &[&str]) -> Output {
    bifconj()
        .args(args)
        .output()
        .expect("failed to spawn bifconj")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is not UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is not UTF-8")
}

/// Parses one float CSV cell as emitted by the binary.
fn cell(s: &str) -> f64 {
    s.parse::<f64>()
        .unwrap_or_else(|_| panic!("cell '{s}' is not a float"))
}

#[test]
fn verify_is_deterministic_and_reports_json_lines() {
    let args = ["verify", "--suite", "huls", "--seed", "42"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(
        first.stdout, second.stdout,
        "same suite and seed must produce byte-identical output"
    );
    let text = stdout_of(&first);
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty());
    for line in lines {
        let v: serde_json::Value = serde_json::from_str(line).expect("line is not JSON");
        assert_eq!(v["passed"], serde_json::Value::Bool(true));
        assert!(v["measured"].is_number());
        assert!(v["bound"].is_number());
        assert!(v["name"].is_string());
    }
}

#[test]
fn classify_emits_verdict_conditions_and_discriminant() {
    let out = run(&["classify", "--map", "wiggins-counterexample"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(stdout_of(&out).trim()).expect("output is not JSON");
    assert_eq!(v["verdict"], "none");
    assert!(
        v["discriminant"].as_f64().unwrap() < 0.0,
        "this map fails exactly the discriminant condition"
    );
    let conditions = v["conditions"].as_array().unwrap();
    assert!(conditions.len() >= 4);
    for c in conditions {
        assert!(c["name"].is_string());
        assert!(c["value"].is_number());
        assert!(c["satisfied"].is_boolean());
    }
    let tc = run(&["classify", "--map", "tc-phi"]);
    assert_eq!(tc.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout_of(&tc).trim()).unwrap();
    assert_eq!(v["verdict"], "transcritical");
}

#[test]
fn conjugacy_emits_monotone_values_and_small_residuals() {
    let out = run(&[
        "conjugacy", "--kind", "tc", "--h", "0.1", "--alpha", "0.01", "--p", "1", "--region",
        "inner", "--grid", "64",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,Jx,id_minus_J,residual"));
    let mut prev_jx = f64::NEG_INFINITY;
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4, "row '{line}'");
        let (x, jx, diff, res) = (cell(cols[0]), cell(cols[1]), cell(cols[2]), cell(cols[3]));
        assert!(jx > prev_jx, "Jx must be strictly increasing");
        prev_jx = jx;
        assert!((x - jx - diff).abs() <= 1e-15 * (1.0 + x.abs()));
        assert!(res.abs() <= 1e-10, "conjugation defect too large: {res}");
        rows += 1;
    }
    assert_eq!(rows, 64);
}

#[test]
fn out_of_box_parameters_are_rejected_before_computation() {
    let out = run(&[
        "conjugacy", "--kind", "pf", "--h", "0.1", "--alpha", "0.005", "--p", "1", "--region",
        "inner", "--grid", "16",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(
        err.contains("alpha0"),
        "message must name the violated constraint, got: {err}"
    );

    let ok = run(&[
        "conjugacy", "--kind", "pf", "--h", "0.1", "--alpha", "0.005", "--p", "1", "--region",
        "inner", "--grid", "16", "--allow-outside-box",
    ]);
    assert_eq!(ok.status.code(), Some(0), "stderr: {}", stderr_of(&ok));
}

#[test]
fn usage_and_validation_errors_exit_2() {
    assert_eq!(run(&["verify", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    let bad_suite = run(&["verify", "--suite", "nonsense"]);
    assert_eq!(bad_suite.status.code(), Some(2));
    assert!(stderr_of(&bad_suite).contains("unknown suite"));
    let bad_map = run(&["classify", "--map", "nonsense"]);
    assert_eq!(bad_map.status.code(), Some(2));
    let bad_kind = run(&[
        "conjugacy", "--kind", "saddle", "--h", "0.1", "--alpha", "0.01", "--p", "1", "--region",
        "inner",
    ]);
    assert_eq!(bad_kind.status.code(), Some(2));
    assert!(stderr_of(&bad_kind).contains("unknown kind"));
}

#[test]
fn thread_cap_is_validated() {
    let bad = bifconj()
        .args(["verify", "--suite", "huls"])
        .env("BIFCONJ_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr_of(&bad).contains("BIFCONJ_THREADS"));

    let zero = bifconj()
        .args(["verify", "--suite", "huls"])
        .env("BIFCONJ_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(zero.status.code(), Some(2));

    let one = bifconj()
        .args(["verify", "--suite", "huls", "--seed", "7"])
        .env("BIFCONJ_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0), "stderr: {}", stderr_of(&one));
}

#[test]
fn sweep_reads_config_and_recovers_the_closeness_order() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("sweep.conf");
    let out_path = dir.path().join("sweep.csv");
    std::fs::write(
        &config_path,
        "kind = tc\np = 1\nh = 0.1, 0.05, 0.025, 0.0125\nalpha = 0.01\n\
         region = inner\ntail = hp_power\ngrid = 64\n",
    )
    .unwrap();
    let out = run(&[
        "sweep",
        "--config",
        config_path.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,alpha,sup,slope_so_far");
    assert_eq!(lines.len(), 5, "header plus one row per step size");
    let last: Vec<&str> = lines[4].split(',').collect();
    let slope = cell(last[3]);
    assert!(
        (0.8..=1.2).contains(&slope),
        "running order fit should recover slope 1, got {slope}"
    );
}

#[test]
fn sweep_rejects_malformed_config() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.conf");
    std::fs::write(&config_path, "kind = tc\np = 1\nbogus_key = 3\n").unwrap();
    let out = run(&["sweep", "--config", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = run(&["sweep", "--config", "/no/such/file.conf"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn section5_writes_orbit_csv_and_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("orbit.csv");
    let out = run(&[
        "section5",
        "--h",
        "1e-3",
        "--alpha",
        "-0.5",
        "--N",
        "200",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let summary: serde_json::Value =
        serde_json::from_str(stdout_of(&out).trim()).expect("summary is not JSON");
    for key in ["sup", "rho", "alpha_tilde", "series_residuals"] {
        assert!(summary.get(key).is_some(), "summary lacks '{key}'");
    }
    assert!((summary["rho"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,delta");
    assert_eq!(lines.len(), 202, "header plus n = 0..=200");
    assert_eq!(cell(lines[1].split(',').nth(1).unwrap()), 0.0);
}

#[test]
fn portrait_traces_exact_planar_orbits() {
    let out = run(&[
        "portrait", "--h", "0.1", "--alpha", "-0.5", "--n-steps", "10", "--point", "-0.5,0.5",
        "--point", "0.25,1.0",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "point_id,n,x,y");
    assert_eq!(lines.len(), 23, "header plus 11 rows per point");
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        let id: usize = cols[0].parse().unwrap();
        let n: usize = cols[1].parse().unwrap();
        let y = cell(cols[3]);
        let y0 = if id == 0 { 0.5 } else { 1.0 };
        let expect = y0 * (-(n as f64) * 0.1).exp();
        assert!(
            (y - expect).abs() <= 1e-14 * (1.0 + expect.abs()),
            "y column must follow the exact contraction e^(-nh)"
        );
    }
}

#[test]
fn branches_traces_the_transcritical_crossing() {
    let out = run(&[
        "branches", "--map", "tc-phi", "--h", "0.1", "--alpha-min", "-0.2", "--alpha-max", "0.2",
        "--n-alpha", "21",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,x,multiplier,stability,branch_id");
    let mut ids = std::collections::BTreeSet::new();
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert!(
            ["attracting", "neutral", "repelling"].contains(&cols[3]),
            "bad stability word '{}'",
            cols[3]
        );
        ids.insert(cols[4].parse::<usize>().unwrap());
    }
    assert!(
        ids.len() >= 2,
        "a transcritical diagram has at least two branches"
    );
}

#[test]
fn output_files_are_written_where_requested() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("out.csv");
    // Parent directory does not exist: must fail cleanly with exit 2.
    let out = run(&[
        "portrait", "--h", "0.1", "--alpha", "0.2", "--n-steps", "3", "--point", "0.1,0.1",
        "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());

    let flat = dir.path().join("out.csv");
    let ok = run(&[
        "portrait", "--h", "0.1", "--alpha", "0.2", "--n-steps", "3", "--point", "0.1,0.1",
        "--output", flat.to_str().unwrap(),
    ]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(Path::new(&flat).exists());
    let csv = std::fs::read_to_string(&flat).unwrap();
    assert!(csv.starts_with("point_id,n,x,y\n"));
    assert!(csv.ends_with('\n'));
    assert!(!csv.contains('\r'), "line endings must be LF only");
}
