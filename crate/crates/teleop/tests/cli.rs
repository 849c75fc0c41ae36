use std::path::Path;
use std::process::Command;

fn iagf(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_iagf")).args(args).output().unwrap()
}

fn run_seed_42(out: &Path) -> Vec<u8> {
    let status = iagf(&["run", "--scenario", "s3", "--method", "iagf", "--seed", "42", "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("s3_iagf_42.jsonl")).unwrap()
}

#[test]
fn run_is_byte_identical_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_seed_42(&dir.path().join("a"));
    let b = run_seed_42(&dir.path().join("b"));
    assert!(!a.is_empty());
    assert_eq!(a, b);

    let reported: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a/s3_iagf_42.json")).unwrap()).unwrap();
    let replay = iagf(&["replay", "--log", dir.path().join("a/s3_iagf_42.jsonl").to_str().unwrap()]);
    assert!(replay.status.success());
    let replayed: serde_json::Value = serde_json::from_slice(&replay.stdout).unwrap();
    for key in ["success", "completion_time", "disagreement", "alignment_time", "min_manipulability"] {
        assert_eq!(replayed[key], reported[key], "{key}");
    }
}

#[test]
fn suite_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, "[suite]\nscenarios = [\"s1\", \"s2\"]\nmethods = [\"na\", \"iagf\"]\nseeds = [0, 1]\n").unwrap();
    let out = dir.path().join("out");
    let status = iagf(&["suite", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
    let episodes: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("episodes.json")).unwrap()).unwrap();
    assert_eq!(episodes.as_array().unwrap().len(), 8);
}

#[test]
fn shipped_config_loads() {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
    let dir = tempfile::tempdir().unwrap();
    let status =
        iagf(&["run", "--scenario", "edge", "--method", "na", "--config", config, "--out", dir.path().to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
}

#[test]
fn bad_arguments_fail() {
    assert!(!iagf(&["run", "--scenario", "s1", "--method", "xx", "--out", "/tmp/unused"]).status.success());
    assert!(!iagf(&["run", "--scenario", "nope", "--method", "na", "--out", "/tmp/unused"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[field]\nalpha = 0.5\n").unwrap();
    let out = iagf(&["suite", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}
