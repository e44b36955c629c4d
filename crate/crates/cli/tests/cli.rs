use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn regimelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regimelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn blocking_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = regimelab(&["blocking", "--out", &out_arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("suite,check,passed,value,requirement"));
    assert!(csv.contains("blocking,v_b_blocked,true"));
    assert!(dir.path().join("summary.json").exists());
    assert!(dir.path().join("traces/blocking.jsonl").exists());
}

#[test]
fn unknown_suite_in_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "suites = [\"blocking\", \"astrology\"]\n").unwrap();
    let out = regimelab(&["all", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("astrology"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn empty_suite_list_succeeds_with_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, "suites = []\n").unwrap();
    let out = regimelab(&["all", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["suites"].as_array().unwrap().len(), 0);
    assert_eq!(summary["passed"], true);
}

#[test]
fn sandbox_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = regimelab(&["sandbox", "--seed", "7", "--out", &out_arg(d.path())]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    }
    for f in ["results.csv", "summary.json", "sandbox.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn classify_reads_written_traces() {
    let dir = tempfile::tempdir().unwrap();
    assert!(regimelab(&["wcst", "--out", &out_arg(dir.path())]).status.success());
    let trace = dir.path().join("traces/wcst_intact.jsonl");
    let out = regimelab(&["classify", trace.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"Structural\""), "{text}");
    assert!(text.contains("closure=true"));
}

#[test]
fn report_replays_saved_verdict() {
    let dir = tempfile::tempdir().unwrap();
    assert!(regimelab(&["blocking", "--out", &out_arg(dir.path())]).status.success());
    let out = regimelab(&["report", "--out", &out_arg(dir.path())]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("[PASS] blocking"));
    let missing = regimelab(&["report", "--out", &out_arg(&dir.path().join("nope"))]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn tiny_training_run_saves_a_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(
        &cfg,
        "[protocol.training]\nmax_updates = 3\nhidden_dim = 6\n[competence]\nepisodes = 20\nrandom_episodes = 200\n",
    )
    .unwrap();
    let out = regimelab(&["train", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    // three updates are nowhere near competent, so the competence check fails
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("policy.json").exists());
    assert!(dir.path().join("training_curve.csv").exists());
    let probe_cfg = dir.path().join("probe.toml");
    fs::write(
        &probe_cfg,
        "suites = [\"competence\"]\n[competence]\nepisodes = 20\nrandom_episodes = 200\n",
    )
    .unwrap();
    let out = regimelab(&[
        "all",
        "--config",
        probe_cfg.to_str().unwrap(),
        "--checkpoint",
        dir.path().join("policy.json").to_str().unwrap(),
        "--out",
        &out_arg(&dir.path().join("again")),
    ]);
    assert_ne!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
