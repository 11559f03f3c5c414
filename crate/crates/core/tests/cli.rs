use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mmslab"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("MMSLAB_THREADS", t),
        None => cmd.env_remove("MMSLAB_THREADS"),
    };
    cmd.output().expect("spawn mmslab")
}

fn grid(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join(format!("grid{n}.json"));
    let n = n.to_string();
    let out = cli(
        &["gen", "--kind", "euclidean_grid", "--n", &n, "--dim", "2", "--out", path.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn linear_field_global_constant() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 8);
    let v = json(&cli(&["analyze", "--space", g.to_str().unwrap(), "--function", "linear:3,-1"], None));
    assert_eq!(v["global_lip"].as_f64().unwrap(), 3.16227766017);
    assert_eq!(v["config"]["command"], "analyze");
    assert_eq!(v["space"]["points"], 64);
    for p in v["points"].as_array().unwrap() {
        assert!(p["lip"].as_f64().unwrap() <= p["lip_upper"].as_f64().unwrap());
    }
}

#[test]
fn grid_is_quasiconvex() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 12);
    let v = json(&cli(&["qc", "--space", g.to_str().unwrap(), "--pairs", "10"], None));
    let c = v["constant"].as_f64().unwrap();
    assert!((1.0..=1.5).contains(&c), "{c}");
}

#[test]
fn asymmetric_matrix_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("asym.json");
    std::fs::write(&path, r#"{"dist_matrix": [[0, 1], [2, 0]]}"#).unwrap();
    let out = cli(&["analyze", "--space", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("symmetry"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 6);
    let g = g.to_str().unwrap();
    let missing = dir.path().join("missing.json");
    let out = cli(&["pi", "--space", missing.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.json"));

    assert_eq!(cli(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(cli(&["analyze", "--space", g, "--function", "wave:1"], None).status.code(), Some(2));
    assert_eq!(cli(&["analyze", "--space", g, "--ratio", "1.5"], None).status.code(), Some(2));
    assert_eq!(cli(&["blowup", "--space", g, "--point", "999"], None).status.code(), Some(2));
    assert_eq!(cli(&["pi", "--space", g], Some("zero")).status.code(), Some(2));
}

#[test]
fn disconnected_pairs_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.json");
    std::fs::write(&path, r#"{"coords": [[0], [10]]}"#).unwrap();
    let out = cli(&["qc", "--space", path.to_str().unwrap(), "--eps", "1"], None);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("no eps-path"));
    // the report is still written
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["constant"].is_null());
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 10);
    let args = ["pi", "--space", g.to_str().unwrap()];
    let one = cli(&args, Some("1"));
    let four = cli(&args, Some("4"));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn out_flag_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 6);
    let target = dir.path().join("report.csv");
    let out = cli(
        &["analyze", "--space", g.to_str().unwrap(), "--format", "csv", "--out", target.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header = rows.headers().unwrap().clone();
    assert!(header.iter().any(|h| h == "lip"), "{header:?}");
    assert_eq!(rows.records().count(), 36);
}

#[test]
fn atlas_on_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 12);
    let v = json(&cli(&["atlas", "--space", g.to_str().unwrap(), "--dictionary", "coord:0;coord:1;linear:1,1"], None));
    let patches = v["patches"].as_array().unwrap();
    assert_eq!(patches.len(), 1);
    assert_eq!(patches[0]["dimension"], 2);
}
