use std::fs;
use std::path::Path;
use std::process::Command;

use wds_cli::manifest::{load_manifest, MANIFEST_NAME};
use wds_cli::{report, CliError};

fn wds(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_wds"))
        .args(args)
        .current_dir(dir)
        .env_remove("WDS_OUT_ROOT")
        .output()
        .expect("binary runs")
}

#[test]
fn missing_required_key_exits_two_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wds(tmp.path(), &["am-compute", "--k", "1", "--p", "0", "--out", "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("am-compute.q"));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn malformed_values_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["sturmian", "--alpha", "not-an-angle", "--out", "a"][..],
        &["am-compute", "--k", "1", "--p", "0", "--q", "0", "--out", "b"],
        &["am-compute", "--k", "1", "--p", "0", "--q", "1", "--branch", "up", "--out", "c"],
        &["verify-containment", "--certificate", "nope.json", "--omegas", "1/8", "--out", "d"],
    ] {
        let out = wds(tmp.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.conf"), "# golden window\nalpha = 1/3\nradius = 40\nmax-len = 10\n").unwrap();
    let out = wds(tmp.path(), &["sturmian", "--config", "run.conf", "--alpha", "golden", "--out", "s"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = load_manifest(&tmp.path().join("s").join(MANIFEST_NAME)).unwrap();
    assert_eq!(m.config["alpha"], "golden");
    assert_eq!(m.config["radius"], "40");
    assert!(m.checks.iter().all(|c| c.passed));
    let table = fs::read_to_string(tmp.path().join("s/complexity.csv")).unwrap();
    assert_eq!(table.lines().count(), 11);
}

#[test]
fn env_var_sets_default_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wds"))
        .args(["sturmian", "--alpha", "golden", "--radius", "30"])
        .current_dir(tmp.path())
        .env("WDS_OUT_ROOT", "elsewhere")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("elsewhere/sturmian").join(MANIFEST_NAME).exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("alphas.txt"), "golden\nsqrt2-minus-1\n").unwrap();
    let runs: [&[&str]; 3] = [
        &["sturmian", "--alpha", "3-sqrt5-over-2", "--radius", "200"],
        &["wds-family", "--alpha-list", "alphas.txt", "--depth", "5"],
        &["am-compute", "--k", "1", "--p", "0", "--q", "1", "--seed", "7"],
    ];
    for args in runs {
        for dir in ["one", "two"] {
            let mut a = args.to_vec();
            a.extend(["--out", dir]);
            assert_eq!(wds(tmp.path(), &a).status.code(), Some(0), "{args:?}");
        }
        let m1 = load_manifest(&tmp.path().join("one").join(MANIFEST_NAME)).unwrap();
        let m2 = load_manifest(&tmp.path().join("two").join(MANIFEST_NAME)).unwrap();
        for (a, b) in m1.files.iter().zip(&m2.files) {
            if a.path.ends_with(".csv") || a.path.ends_with(".json") {
                assert_eq!(a.sha256, b.sha256, "{}", a.path);
            }
        }
        assert_eq!(m1.config, m2.config);
        fs::remove_dir_all(tmp.path().join("one")).unwrap();
        fs::remove_dir_all(tmp.path().join("two")).unwrap();
    }
}

#[test]
fn tampered_artifact_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(wds(tmp.path(), &["denjoy", "--iterates", "50", "--out", "d"]).status.code(), Some(0));
    let manifest = tmp.path().join("d").join(MANIFEST_NAME);
    let summary = report(std::slice::from_ref(&manifest)).unwrap();
    assert_eq!(summary.runs, 1);
    assert!(summary.all_passed());

    let orbit = tmp.path().join("d/orbit.csv");
    let mut text = fs::read_to_string(&orbit).unwrap();
    text.push_str("50,0.5,0.5\n");
    fs::write(&orbit, text).unwrap();
    match report(&[manifest.clone()]) {
        Err(CliError::DigestMismatch { path, .. }) => assert!(path.ends_with("orbit.csv")),
        other => panic!("expected a digest mismatch, got {other:?}"),
    }
    let out = wds(tmp.path(), &["report", manifest.to_str().unwrap(), "--out", "r"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("digest mismatch"));
}

#[test]
fn empty_report_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wds(tmp.path(), &["report", "--out", "r"]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("r/summary.md")).unwrap();
    assert!(text.contains("runs: 0"));
}

#[test]
fn denjoy_map_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(wds(tmp.path(), &["denjoy", "--alpha", "sqrt2-minus-1", "--out", "a"]).status.code(), Some(0));
    let out = wds(tmp.path(), &["denjoy", "--map", "a/denjoy_map.txt", "--out", "b"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(tmp.path().join("a/orbit.csv")).unwrap(), fs::read(tmp.path().join("b/orbit.csv")).unwrap());
}

#[test]
fn horseshoe_then_containment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wds(tmp.path(), &["horseshoe-build", "--k", "1", "--p", "0", "--q", "1", "--out", "h"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = wds(
        tmp.path(),
        &["verify-containment", "--certificate", "h/certificate.json", "--omegas", "1/8, 1/13, 2/25", "--out", "v"],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("v/report.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("1/13,")).unwrap();
    assert!(row.contains(",true,"));
    let summary = report(&[tmp.path().join("h").join(MANIFEST_NAME), tmp.path().join("v").join(MANIFEST_NAME)]).unwrap();
    assert!(summary.all_passed(), "{}", summary.to_text());
    assert!(fs::read_to_string(tmp.path().join("h/overlay.svg")).unwrap().starts_with("<svg"));
}
