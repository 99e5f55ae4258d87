use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matsl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn dirichlet() -> Value {
    json!({"m": 1, "T1": [[0.0]], "T2": [[0.0]]})
}

fn star() -> Value {
    let t = 1.0 / 3.0;
    json!({"m": 3, "T1": [0,0,0, 0,0,0, 0,0,0], "T2": [t,t,t, t,t,t, t,t,t]})
}

#[test]
fn zerocase_writes_closed_forms_with_17_digits() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &dirichlet());
    let o = run(&["zerocase", &p, "--nmax", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert!(text.contains("9.0000000000000000e0"), "{text}");
    let v = stdout_json(&o);
    let e = &v["entries"][1];
    assert_eq!(e["n"], 2);
    let alpha = e["alpha"][0][0][0].as_f64().unwrap();
    assert!((alpha - 8.0 / PI).abs() < 1e-14);
}

#[test]
fn spectrum_csv_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &dirichlet());
    let o = run(&["--csv", "spectrum", &p, "--nmax", "4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,k,lambda,mult,alpha_re_11,alpha_im_11");
    assert_eq!(lines.len(), 5);
}

#[test]
fn spectrum_out_file_and_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &star());
    let out = dir.path().join("d.json");
    let o = run(&[
        "--threads",
        "1",
        "spectrum",
        &p,
        "--nmax",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let mults: Vec<u64> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["multiplicity"].as_u64().unwrap())
        .collect();
    assert_eq!(&mults[..3], &[1, 2, 2]);
}

#[test]
fn weyl_matches_coth() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &dirichlet());
    let o = run(&["weyl", &p, "--lambda", "-1,0"]);
    assert!(o.status.success());
    let m = stdout_json(&o)["M"][0][0][0].as_f64().unwrap();
    assert!((m - 1.0 / PI.tanh()).abs() < 1e-6);
}

#[test]
fn recover_round_trip_from_zero_data() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &star());
    let data = dir.path().join("d.json");
    let o = run(&[
        "zerocase",
        &p,
        "--nmax",
        "24",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = run(&["recover", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    for i in 0..3 {
        for j in 0..3 {
            let t1 = v["T1"][i][j][0].as_f64().unwrap();
            let t2 = v["T2"][i][j][0].as_f64().unwrap();
            assert!(t1.abs() < 1e-8);
            assert!((t2 - 1.0 / 3.0).abs() < 1e-8);
        }
    }
}

#[test]
fn basis_reports_zero_case_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &dirichlet());
    let data = dir.path().join("d.json");
    assert!(run(&[
        "zerocase",
        &p,
        "--nmax",
        "8",
        "--out",
        data.to_str().unwrap()
    ])
    .status
    .success());
    let o = run(&[
        "basis",
        data.to_str().unwrap(),
        "--N",
        "8",
        "--grid",
        "4096",
        "--problem",
        &p,
    ]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    for key in ["lower", "upper"] {
        assert!((v[key].as_f64().unwrap() - PI / 2.0).abs() < 1e-6, "{v}");
    }
}

#[test]
fn graph_reduce_emits_problem() {
    let dir = tempfile::tempdir().unwrap();
    let g = json!({
        "vertices": [
            {"id": "a", "condition": "dirichlet"},
            {"id": "m"},
            {"id": "b", "condition": "dirichlet"}
        ],
        "edges": [
            {"v0": "a", "v1": "m", "length": [1, 1]},
            {"v0": "m", "v1": "b", "length": [1, 1]}
        ]
    });
    let path = write(dir.path(), "g.json", &g);
    let o = run(&["graph-reduce", &path]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["m"], 2);
    assert!((v["T2"][0][1][0].as_f64().unwrap() - 0.5).abs() < 1e-15);
    let o = run(&["--csv", "graph-reduce", &path]);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .starts_with("matrix,i,j,re,im"));
}

#[test]
fn verify_passes_on_a_valid_problem() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        &json!({"m": 1, "N": 2, "sigma": [[[0.3]], [[-0.2]]], "T1": [[1.0]], "T2": [[0.0]]}),
    );
    let o = run(&["verify", &p, "--nmax", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(stdout_json(&o)["pass"], true);
}

#[test]
fn invalid_projector_exits_1_with_name() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        &json!({"m": 1, "T1": [[0.5]], "T2": [[0.0]]}),
    );
    let o = run(&["spectrum", &p, "--nmax", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().next(), Some("NotProjector"));
}

#[test]
fn pole_hit_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &dirichlet());
    let o = run(&["weyl", &p, "--lambda", "1,0"]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn missing_file_and_bad_usage_exit_1() {
    assert_eq!(
        run(&["spectrum", "/nonexistent.json", "--nmax", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["spectrum"]).status.code(), Some(1));
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        &json!({"m": 2, "N": 3, "sigma": [[0.2, 0.1, 0.1, -0.3], [0.0, 0.0, 0.0, 0.0], [0.5, 0.0, 0.0, 0.1]],
                "T1": [1, 0, 0, 0], "T2": [0.5, 0.5, 0.5, 0.5]}),
    );
    let one = run(&["--threads", "1", "spectrum", &p, "--nmax", "6"]);
    let many = run(&["--threads", "4", "spectrum", &p, "--nmax", "6"]);
    assert!(one.status.success() && many.status.success());
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stdout, run(&["--threads", "1", "spectrum", &p, "--nmax", "6"]).stdout);
}
