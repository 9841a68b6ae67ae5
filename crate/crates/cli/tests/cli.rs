use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(path)
}

fn gridforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridforge"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_solve_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let state = fixture("two_substation/VA.geojson");
    let fixtures = fixture("two_substation/fixtures");
    let o = gridforge(&["build", "--state", s(&state), "--fixtures", s(&fixtures), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("buses 2"), "{text}");
    assert!(text.contains("dc: locally_solved at L0"), "{text}");

    std::fs::remove_file(out.join("solution_ac.json")).unwrap();
    let model = out.join("model.json");
    let o = gridforge(&["solve", "--model", s(&model), "--dc-only"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("solution_dc.json").exists());
    assert!(!out.join("solution_ac.json").exists());

    let o = gridforge(&["report", "--run", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("run "));
}

#[test]
fn bad_hour_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let state = fixture("two_substation/VA.geojson");
    let fixtures = fixture("two_substation/fixtures");
    let o = gridforge(&[
        "build", "--state", s(&state), "--fixtures", s(&fixtures), "--out", s(dir.path()), "--hour", "30",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stdout).unwrap().contains("failed at demand"));
}

#[test]
fn missing_inputs_exit_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridforge(&["report", "--run", s(dir.path())]);
    assert_eq!(o.status.code(), Some(4));
    let o = gridforge(&["solve", "--model", s(&dir.path().join("model.json"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn malformed_model_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, "{\"baseMVA\": 100.0}").unwrap();
    let o = gridforge(&["solve", "--model", s(&model)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_level_is_rejected_by_argument_parsing() {
    let o = gridforge(&["solve", "--model", "x.json", "--max-level", "L9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}
