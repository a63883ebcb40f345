use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn flow(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flow"))
        .args(args)
        .env("FLOW_OUTPUT_ROOT", root)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_then_diagnose_and_render() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), "chord.toml", "scenario = \"chord\"\n[flow]\nt_end = 0.002\n");
    let o = flow(root.path(), &["run", &cfg, "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run_dir = root.path().join("chord-s4");
    assert!(stdout(&o).contains("chord-s4: 20 epochs"));
    for f in ["run.json", "snapshots.jsonl", "diagnostics.jsonl", "moves.jsonl", "config.toml"] {
        assert!(run_dir.join(f).is_file(), "{f}");
    }
    let summary = fs::read_to_string(root.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);

    // the written config reruns to the same trajectory
    let again = root.path().join("again");
    let o = flow(root.path(), &["run", run_dir.join("config.toml").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(run_dir.join("snapshots.jsonl")).unwrap(), fs::read(again.join("snapshots.jsonl")).unwrap());

    let dir = run_dir.to_str().unwrap();
    let o = flow(root.path(), &["diag", dir, "--phi", "one", "--t1", "0", "--t2", "0.002"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("holds=true"), "{}", stdout(&o));

    let o = flow(root.path(), &["render", dir]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("3 frames"));
    assert!(run_dir.join("frames").join("frame_00002.svg").is_file());
}

#[test]
fn lists_scenarios() {
    let root = tempfile::tempdir().unwrap();
    let o = flow(root.path(), &["scenarios"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(names, ["chord", "arc-relax", "cross4", "steiner4", "circle", "two-arcs"]);
}

#[test]
fn config_errors_exit_with_2() {
    let root = tempfile::tempdir().unwrap();
    let bad_dt = write_config(root.path(), "a.toml", "scenario = \"chord\"\n[flow]\ndt = -1.0\n");
    let o = flow(root.path(), &["run", &bad_dt]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dt must be positive"));
    let unknown = write_config(root.path(), "b.toml", "scenario = \"nowhere\"\n");
    assert_eq!(flow(root.path(), &["run", &unknown]).status.code(), Some(2));
    let syntax = write_config(root.path(), "c.toml", "scenario = \"chord\"\n[flow\n");
    let o = flow(root.path(), &["run", &syntax]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn unknown_test_function_exits_with_2() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), "chord.toml", "scenario = \"chord\"\n[flow]\nt_end = 0.001\n");
    assert!(flow(root.path(), &["run", &cfg]).status.success());
    let dir = root.path().join("chord-s0");
    let o = flow(root.path(), &["diag", dir.to_str().unwrap(), "--phi", "nope", "--t1", "0", "--t2", "0.001"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn step_failure_exits_with_3_and_keeps_the_partial_run() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), "s.toml", "scenario = \"steiner4\"\n[flow]\ndt = 5.0\nt_end = 5.0\n");
    let o = flow(root.path(), &["run", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("step size"));
    assert!(root.path().join("steiner4-s0").join("snapshots.jsonl").is_file());
}

#[test]
fn io_errors_exit_with_4() {
    let root = tempfile::tempdir().unwrap();
    let missing = root.path().join("missing.toml");
    assert_eq!(flow(root.path(), &["run", missing.to_str().unwrap()]).status.code(), Some(4));
    let empty = root.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(flow(root.path(), &["render", empty.to_str().unwrap()]).status.code(), Some(4));
}
