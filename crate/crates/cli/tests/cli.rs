//! End-to-end runs of the `fpnav` binary.

use std::path::Path;
use std::process::{Command, Output};

fn fpnav(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_fpnav"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("spawn fpnav");
    out
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fpnav(dir, args);
    assert!(
        out.status.success(),
        "fpnav {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn setup(dir: &Path) {
    ok(dir, &["gen-floorplan", "--rooms", "6", "--seed", "3", "--out", "fp.json"]);
    ok(
        dir,
        &["gen-episodes", "--floorplan", "fp.json", "--count", "3", "--seed", "1", "--out", "eps"],
    );
}

fn episode_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files: Vec<_> = std::fs::read_dir(dir.join("eps"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
}

#[test]
fn generated_episodes_replay_to_success() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    let files = episode_files(tmp.path());
    assert_eq!(files.len(), 3);
    for f in files {
        let stdout = ok(tmp.path(), &["replay", "--episode", f.to_str().unwrap()]);
        let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(v["success"], true, "{stdout}");
        assert!(v["ne"].as_f64().unwrap() < 3.0);
    }
}

#[test]
fn annotate_emits_one_trace_per_episode() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    let stdout = ok(tmp.path(), &["annotate", "--episodes", "eps", "--out", "kept"]);
    let lines: Vec<serde_json::Value> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    let kept = lines.iter().filter(|l| l["rejected"].is_null()).count();
    let copied = std::fs::read_dir(tmp.path().join("kept"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "json"))
        .count();
    assert_eq!(kept, copied);
    // Kept episodes stay loadable from their new directory.
    ok(tmp.path(), &["stats", "--episodes", "kept"]);
}

#[test]
fn qa_gen_writes_balanced_nav_records() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    ok(
        tmp.path(),
        &["qa-gen", "--episodes", "eps", "--task", "nav", "--balance", "0.5", "--out", "nav.jsonl"],
    );
    let text = std::fs::read_to_string(tmp.path().join("nav.jsonl")).unwrap();
    assert!(text.lines().count() > 0);
    for line in text.lines() {
        let _: serde_json::Value = serde_json::from_str(line).unwrap();
    }
    let err = fpnav(
        tmp.path(),
        &["qa-gen", "--episodes", "eps", "--task", "region_localization", "--balance", "0.5", "--out", "x.jsonl"],
    );
    assert!(!err.status.success());
}

#[test]
fn export_dual_view_writes_manifest_and_frames() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    ok(tmp.path(), &["export", "--episodes", "eps", "--layout", "dual_view", "--ppm", "10", "--out", "ex"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("ex/manifest.json")).unwrap()).unwrap();
    let records = manifest["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    for r in records {
        for f in r["frames"].as_array().unwrap() {
            assert!(tmp.path().join("ex").join(f.as_str().unwrap()).is_file());
        }
    }
    let bad = fpnav(tmp.path(), &["export", "--episodes", "eps", "--layout", "mosaic", "--out", "ex2"]);
    assert!(!bad.status.success());
}

#[test]
fn noisy_replay_log_feeds_render() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    let f = episode_files(tmp.path()).remove(0);
    ok(
        tmp.path(),
        &[
            "replay", "--episode", f.to_str().unwrap(), "--sigma-move", "0.1", "--sigma-rot", "0.05",
            "--seed", "4", "--log", "log.jsonl", "--frames", "fr",
        ],
    );
    let log = std::fs::read_to_string(tmp.path().join("log.jsonl")).unwrap();
    let frames = std::fs::read_dir(tmp.path().join("fr/frames")).unwrap().count();
    assert_eq!(log.lines().count(), frames);
    ok(
        tmp.path(),
        &["render", "--floorplan", "fp.json", "--trajectory", "log.jsonl", "--believed", "--mask", "0.5", "--out", "r.png"],
    );
    let png = std::fs::read(tmp.path().join("r.png")).unwrap();
    assert_eq!(&png[..4], b"\x89PNG");
}

#[test]
fn run_then_eval_reproduces_table() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    let printed = ok(tmp.path(), &["run", "--episodes", "eps", "--seeds", "1,2", "--out", "res"]);
    let table = ok(tmp.path(), &["eval", "--results", "res", "--table", "md"]);
    assert_eq!(printed, table);
    assert!(table.contains("| full | "));
    let csv = ok(tmp.path(), &["eval", "--results", "res", "--table", "csv"]);
    assert!(csv.starts_with("setting,NE,OSR,SR,SPL"));
}

#[test]
fn actuation_preset_has_four_rows() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    let csv_dir = tmp.path().join("res");
    ok(tmp.path(), &["run", "--episodes", "eps", "--preset", "actuation", "--out", "res"]);
    let csv = std::fs::read_to_string(csv_dir.join("table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(1).unwrap().starts_with("\"sigma_move=0.00"));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    for args in [
        vec!["run", "--episodes", "eps", "--plan-mode", "bogus", "--out", "x"],
        vec!["run", "--episodes", "eps", "--policy", "psychic", "--out", "x"],
        vec!["run", "--episodes", "eps", "--policy", "deadreck", "--plan-mode", "random", "--out", "x"],
        vec!["eval", "--results", "missing"],
        vec!["render", "--floorplan", "fp.json", "--pose", "1,2", "--out", "p.png"],
        vec!["stats", "--episodes", "eps", "--bin", "0"],
    ] {
        let out = fpnav(tmp.path(), &args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}
