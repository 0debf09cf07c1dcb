use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn vrpca(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vrpca"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn synth_and_convert_round_trip() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let o = vrpca(
        &[
            "synth", "--head", "1,0.5", "--dim", "6", "--n", "40", "--seed", "3", "--out", "a.vrpc",
        ],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = vrpca(&["convert", "a.vrpc", "a.csv"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = vrpca(&["convert", "a.csv", "b.bin", "--to", "f64le"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(d.join("a.vrpc")).unwrap(), fs::read(d.join("b.bin")).unwrap());
    assert_eq!(fs::read_to_string(d.join("a.csv")).unwrap().lines().count(), 40);
}

#[test]
fn parse_errors_exit_with_one() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.csv"), "1,2\n3\n").unwrap();
    let o = vrpca(&["solve", "--dataset", "bad.csv", "--lambda", "0.1"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.csv:2"), "{}", stderr(&o));

    fs::write(d.join("bad.vrpc"), b"ABCD\0\0\0\0\0\0\0\0").unwrap();
    let o = vrpca(&["convert", "bad.vrpc", "out.csv"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at byte 0"), "{}", stderr(&o));

    let o = vrpca(&["solve", "--no-such-flag"], d);
    assert_eq!(o.status.code(), Some(1));
    let o = vrpca(&["solve", "--head", "1,0.5", "--n", "10", "--seeds", "1,1"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed 1"), "{}", stderr(&o));
}

#[test]
fn degenerate_data_exits_with_two() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    // A = 0 maps every start to zero, so the warm start cannot normalize.
    fs::write(d.join("zero.csv"), "0,0,0\n0,0,0\n").unwrap();
    let o = vrpca(
        &[
            "solve",
            "--dataset",
            "zero.csv",
            "--init",
            "power",
            "--verify",
            "false",
            "--lambda",
            "0.1",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("cfg.json"),
        r#"{"dataset": {"synthetic": {"head": [1.0, 0.6], "dim": 10, "n": 100, "seed": 2}},
            "epochs": 7, "seeds": [5]}"#,
    )
    .unwrap();
    let o = vrpca(
        &["solve", "--config", "cfg.json", "--epochs", "2", "--output-dir", "out"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("seed 5: potential"), "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["epochs"], 2);
    assert_eq!(report["runs"][0]["epoch_potentials"].as_array().unwrap().len(), 3);
    let trace = fs::read_to_string(d.join("out/trace_seed5.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    let keys: Vec<&str> = first.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys, ["elapsed_s", "epoch", "iter", "potential", "residual", "samples"]);

    fs::write(d.join("typo.json"), r#"{"epoch": 3}"#).unwrap();
    let o = vrpca(&["solve", "--config", "typo.json"], d);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn geometry_verb_prints_json() {
    let dir = tempdir().unwrap();
    let o = vrpca(&["geometry", "--lambda", "0.2", "--eps", "0.1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let second = v["counterexample"]["second_derivative_at_0"].as_f64().unwrap();
    assert!((second + 0.04).abs() <= 1e-15);
}

#[test]
fn compare_verb_writes_report() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let o = vrpca(
        &[
            "compare",
            "--head",
            "1,0.6",
            "--dim",
            "10",
            "--n",
            "100",
            "--epochs",
            "3",
            "--output-dir",
            "cmp",
        ],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("cmp/compare.json")).unwrap()).unwrap();
    assert_eq!(v["runs"][0]["series"].as_array().unwrap().len(), 3);
}
