use std::path::{Path, PathBuf};

use gridforge::opf::matpower;
use gridforge::opf::{Formulation, Level};
use gridforge::pipeline::{run_pipeline, CoverageFlag, RunConfig, SolutionFile};

fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(path)
}

fn two_substation(out: &Path, hour: u8) -> RunConfig {
    RunConfig {
        hour,
        ..RunConfig::new(
            vec![fixture("two_substation/VA.geojson")],
            fixture("two_substation/fixtures"),
            out.to_path_buf(),
        )
    }
}

fn tri_state(out: &Path) -> RunConfig {
    let inputs = ["VA", "WV", "MD"]
        .iter()
        .map(|s| fixture(&format!("tri_state/{s}.geojson")))
        .collect();
    RunConfig::new(inputs, fixture("tri_state/fixtures"), out.to_path_buf())
}

fn read_solution(dir: &Path, name: &str) -> SolutionFile {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn two_substation_builds_two_buses_and_solves_at_l0() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&two_substation(dir.path(), 16));
    assert!(out.failure.is_none(), "{:?}", out.failure);
    assert_eq!(out.exit_code(), 0);
    let model = out.model.as_ref().unwrap();
    assert_eq!(model.buses.len(), 2);
    assert_eq!(model.branches.len(), 1);
    let r = out.result.as_ref().unwrap();
    assert_eq!(r.dc.as_ref().unwrap().level, Level::L0);
    assert_eq!(r.ac.as_ref().unwrap().level, Level::L0);
    for f in ["model.json", "solution_dc.json", "solution_ac.json", "report.json", "topology.geojson", "timing.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let dc = read_solution(dir.path(), "solution_dc.json");
    assert_eq!(dc.solution.formulation, Formulation::Dc);
    assert_eq!(dc.attempts.len(), 2);
}

#[test]
fn model_file_reads_back_to_the_solved_network() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&two_substation(dir.path(), 16));
    let text = std::fs::read_to_string(dir.path().join("model.json")).unwrap();
    let net = matpower::from_str(&text).unwrap();
    assert_eq!(matpower::to_string(&net), text);
    assert_eq!(net, gridforge::opf::to_per_unit(out.model.as_ref().unwrap()));
}

#[test]
fn peak_and_off_peak_loads_follow_the_demand_curve() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let off = run_pipeline(&two_substation(a.path(), 4));
    let peak = run_pipeline(&two_substation(b.path(), 16));
    let d_off = read_solution(a.path(), "solution_dc.json").solution.demand_mw;
    let d_peak = read_solution(b.path(), "solution_dc.json").solution.demand_mw;
    // fixture demand: 60000 MW at 04 UTC, 90000 MW at 16 UTC
    assert!((d_peak / d_off - 1.5).abs() < 1e-9, "{d_off} {d_peak}");
    assert!(off.failure.is_none() && peak.failure.is_none());
}

#[test]
fn tri_state_merges_border_way_and_reports_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&tri_state(dir.path()));
    assert!(out.failure.is_none(), "{:?}", out.failure);
    let rep = &out.report;
    assert!(rep.multi_state);
    assert_eq!(rep.ingest.merge.duplicates_removed, 1);
    assert!(rep.ingest.merge.conflicting_ids.is_empty());
    assert!(rep.ingest.conserved());
    assert_eq!(rep.inputs, ["VA.geojson", "WV.geojson", "MD.geojson"]);
    let flags: Vec<_> = rep.coverage.iter().map(|r| (r.voltage_kv, r.flag)).collect();
    assert!(flags.contains(&(230.0, Some(CoverageFlag::UnderMapped))));
    assert!(rep.coverage.iter().all(|r| r.voltage_kv != 765.0));
    let counts = rep.model.as_ref().unwrap();
    assert_eq!(counts.transformers, 2);
}

#[test]
fn tri_state_matches_frozen_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tri_state(dir.path());
    cfg.hour = 16;
    run_pipeline(&cfg);
    for f in ["model.json", "solution_dc.json", "solution_ac.json", "report.json", "topology.geojson"] {
        let got = std::fs::read_to_string(dir.path().join(f)).unwrap();
        let want = std::fs::read_to_string(fixture("tri_state/golden").join(f)).unwrap();
        assert!(got == want, "{f} differs from golden");
    }
}

#[test]
fn missing_fixture_table_is_an_io_failure_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = tempfile::tempdir().unwrap();
    let cfg = RunConfig::new(
        vec![fixture("two_substation/VA.geojson")],
        fixtures.path().to_path_buf(),
        dir.path().to_path_buf(),
    );
    let out = run_pipeline(&cfg);
    assert_eq!(out.exit_code(), 2, "{:?}", out.failure);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["error"]["stage"], "ingest");
    assert_eq!(report["ingest"]["line_sections"], 1);
    assert!(!dir.path().join("model.json").exists());
}

#[test]
fn unreadable_input_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::new(
        vec![PathBuf::from("/nonexistent/state.geojson")],
        fixture("two_substation/fixtures"),
        dir.path().to_path_buf(),
    );
    let out = run_pipeline(&cfg);
    assert_eq!(out.exit_code(), 4);
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn bad_hour_is_a_validation_failure_after_topology() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&two_substation(dir.path(), 24));
    assert_eq!(out.exit_code(), 2);
    assert_eq!(out.report.error.as_ref().unwrap().stage, "demand");
    assert!(out.report.topology.is_some());
    assert!(dir.path().join("model.json").exists());
    assert!(!dir.path().join("solution_dc.json").exists());
}

#[test]
fn solver_failure_keeps_artifacts_and_exit_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = two_substation(dir.path(), 16);
    // cap the ladder below the curtailment level with load above capacity
    cfg.solve.max_level = Level::L0;
    cfg.solve.plan.levels[0].thermal_mult = 1e-3;
    let out = run_pipeline(&cfg);
    assert_eq!(out.exit_code(), 3);
    let dc = read_solution(dir.path(), "solution_dc.json");
    assert!(!dc.solution.status.converged());
    assert!(!dir.path().join("solution_ac.json").exists());
}
