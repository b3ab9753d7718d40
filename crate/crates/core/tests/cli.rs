//! End-to-end runs of the `barylab` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use barylab::cli::{strip_run_info, verify_report, ExperimentKind};

const KINDS: [&str; 9] = [
    "wasserstein",
    "barycenter",
    "condexp",
    "martingale",
    "ergodic",
    "semiflow",
    "mapdist",
    "ldp",
    "audit",
];

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn config(kind: &str) -> PathBuf {
    fixtures().join("configs").join(format!("{kind}.json"))
}

fn barylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barylab"))
        .args(args)
        .env_remove("BARYLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn run(kind: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = config(kind);
    let mut args = vec![kind, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    barylab(&args)
}

fn report_path(dir: &Path, kind: &str) -> PathBuf {
    dir.join(format!("{kind}_report.json"))
}

#[test]
fn every_kind_has_a_subcommand() {
    let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.as_str()).collect();
    assert_eq!(names, KINDS);
    let help = String::from_utf8(barylab(&["--help"]).stdout).unwrap();
    for k in KINDS.iter().chain(&["verify"]) {
        assert!(help.contains(k), "help lacks {k}");
    }
}

#[test]
fn reports_match_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    for kind in KINDS {
        let out = run(kind, dir.path(), &[]);
        assert_eq!(out.status.code(), Some(0), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
        let got = fs::read_to_string(report_path(dir.path(), kind)).unwrap();
        let want = fs::read_to_string(fixtures().join("golden").join(format!("{kind}_report.json"))).unwrap();
        assert_eq!(strip_run_info(&got).unwrap(), strip_run_info(&want).unwrap(), "{kind} report drifted");
        let csv = dir.path().join(format!("{kind}_series.csv"));
        let golden_csv = fixtures().join("golden").join(format!("{kind}_series.csv"));
        assert_eq!(csv.exists(), golden_csv.exists(), "{kind} series presence");
        if csv.exists() {
            assert_eq!(fs::read_to_string(csv).unwrap(), fs::read_to_string(golden_csv).unwrap());
        }
        let v = barylab(&["verify", report_path(dir.path(), kind).to_str().unwrap()]);
        assert_eq!(v.status.code(), Some(0), "{kind}: {}", String::from_utf8_lossy(&v.stderr));
    }
}

#[test]
fn reruns_are_byte_identical_apart_from_run_info() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for kind in ["mapdist", "ldp", "audit"] {
        assert_eq!(run(kind, a.path(), &["--threads", "1"]).status.code(), Some(0));
        assert_eq!(run(kind, b.path(), &["--threads", "3"]).status.code(), Some(0));
        let ra = fs::read_to_string(report_path(a.path(), kind)).unwrap();
        let rb = fs::read_to_string(report_path(b.path(), kind)).unwrap();
        assert_ne!(ra.find("\"run_info\""), None);
        assert_eq!(strip_run_info(&ra).unwrap(), strip_run_info(&rb).unwrap(), "{kind}");
        // run_info is the trailing field, so everything before it matches raw.
        let cut = |s: &str| s[..s.find("\"run_info\"").unwrap()].to_owned();
        assert_eq!(cut(&ra), cut(&rb));
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("audit", a.path(), &["--seed", "42"]).status.code(), Some(0));
    assert_eq!(run("audit", b.path(), &["--seed", "43"]).status.code(), Some(0));
    let ra = fs::read_to_string(report_path(a.path(), "audit")).unwrap();
    let rb = fs::read_to_string(report_path(b.path(), "audit")).unwrap();
    let golden = fs::read_to_string(fixtures().join("golden/audit_report.json")).unwrap();
    assert_eq!(strip_run_info(&ra).unwrap(), strip_run_info(&golden).unwrap());
    assert!(rb.contains("\"seed\": 43"));
    assert_ne!(strip_run_info(&ra).unwrap(), strip_run_info(&rb).unwrap());
}

#[test]
fn reports_embed_the_config() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("ldp", dir.path(), &[]).status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report_path(dir.path(), "ldp")).unwrap()).unwrap();
    let original: serde_json::Value = serde_json::from_str(&fs::read_to_string(config("ldp")).unwrap()).unwrap();
    let embedded = &report["config"];
    assert_eq!(embedded["kind"], "ldp");
    for key in ["ns", "grid_resolution", "seed", "event", "monte_carlo"] {
        assert_eq!(embedded[key], original[key], "{key}");
    }
    // Feeding the embedded config back in reproduces the report.
    let again = tempfile::tempdir().unwrap();
    let cfg = again.path().join("embedded.json");
    fs::write(&cfg, serde_json::to_string(embedded).unwrap()).unwrap();
    let out = barylab(&["ldp", "--config", cfg.to_str().unwrap(), "--out", again.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let a = fs::read_to_string(report_path(dir.path(), "ldp")).unwrap();
    let b = fs::read_to_string(report_path(again.path(), "ldp")).unwrap();
    assert_eq!(strip_run_info(&a).unwrap(), strip_run_info(&b).unwrap());
}

#[test]
fn hand_edited_report_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("wasserstein", dir.path(), &[]).status.code(), Some(0));
    let path = report_path(dir.path(), "wasserstein");
    let text = fs::read_to_string(&path).unwrap();
    let mut report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let d = report["result"]["distance"].as_f64().unwrap();
    report["result"]["distance"] = serde_json::json!(d * 1.01);
    let edited = dir.path().join("edited.json");
    fs::write(&edited, serde_json::to_string_pretty(&report).unwrap()).unwrap();
    let out = barylab(&["verify", edited.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed"));

    // Flipping a check verdict is caught as well.
    let flipped = text.replacen("\"pass\": true", "\"pass\": false", 1);
    assert!(!verify_report(&flipped).ok);
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cases = [
        ("syntax.json", "{\"mu\": ".to_owned()),
        ("unknown.json", fs::read_to_string(config("wasserstein")).unwrap().replacen('{', "{\"bogus\": 1,", 1)),
        ("kind.json", fs::read_to_string(config("ldp")).unwrap()),
        ("weights.json", fs::read_to_string(config("wasserstein")).unwrap().replace("0.5", "0.7")),
    ];
    for (name, text) in cases {
        let cfg = dir.path().join(name);
        fs::write(&cfg, text).unwrap();
        let out = barylab(&["wasserstein", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out_dir.exists(), "{name} left output behind");
    }
    let missing = barylab(&["audit", "--config", "/nonexistent/config.json", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn randomized_config_without_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("audit")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("seed");
    let cfg = dir.path().join("audit.json");
    fs::write(&cfg, v.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let args = ["audit", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    assert_eq!(barylab(&args).status.code(), Some(2));
    let mut with_seed = args.to_vec();
    with_seed.extend(["--seed", "42"]);
    assert_eq!(barylab(&with_seed).status.code(), Some(0));
}

#[test]
fn capacity_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(config("ldp")).unwrap()).unwrap();
    v["ns"] = serde_json::json!([61]);
    let cfg = dir.path().join("ldp.json");
    fs::write(&cfg, v.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let out = barylab(&["ldp", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn older_report_versions_still_verify() {
    let path = fixtures().join("legacy/ldp_report_0.0.9.json");
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"version\": \"0.0.9\""));
    assert!(verify_report(&text).ok, "{:?}", verify_report(&text).failures);
    assert_eq!(barylab(&["verify", path.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn verify_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.json");
    fs::write(&path, "[1, 2, 3]").unwrap();
    assert_eq!(barylab(&["verify", path.to_str().unwrap()]).status.code(), Some(1));
    assert!(!verify_report("not json").ok);
}
