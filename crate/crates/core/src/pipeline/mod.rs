//! End-to-end runs: ingest through OPF, with run artifacts.

pub mod artifacts;
pub mod coverage;
pub mod merge;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::NaiveDate;
use log::{error, info};
use thiserror::Error;

pub use coverage::{emit_coverage_diagnostics, CoverageFlag, CoverageRow};
pub use merge::{merge_states, MergeReport};
pub use report::{IngestSummary, ModelCounts, OpfSummary, RunReport, SolutionFile, SolveSummary, StageFailure, Timing};

use crate::demand::{apply_demand, DemandError, DemandOptions};
use crate::ingest::{load_fixture_tables, partition_features, read_feature_collection, IngestError, IngestOptions};
use crate::model::NetworkModel;
use crate::opf::matpower::{self, ModelFileError};
use crate::opf::{progressive_solve, to_per_unit, OpfSolution, ProgressiveResult, PuNetwork, SolveConfig};
use crate::parameters::{assign_generator_parameters, assign_network_parameters, ParameterError, ParameterTables};
use crate::topology::{build_topology, TopologyError, TopologyOptions};

pub const MODEL_FILE: &str = "model.json";
pub const SOLUTION_DC_FILE: &str = "solution_dc.json";
pub const SOLUTION_AC_FILE: &str = "solution_ac.json";
pub const REPORT_FILE: &str = "report.json";
pub const TOPOLOGY_FILE: &str = "topology.geojson";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{stage}: {message}")]
    Validation { stage: &'static str, message: String },
    #[error("solver: {0}")]
    Solver(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation { .. } => 2,
            PipelineError::Solver(_) => 3,
            PipelineError::Io { .. } => 4,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn stage(&self) -> &'static str {
        match self {
            PipelineError::Io { .. } => "io",
            PipelineError::Validation { stage, .. } => stage,
            PipelineError::Solver(_) => "opf",
        }
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { path, source } => PipelineError::Io { path, source },
            e => PipelineError::Validation {
                stage: "ingest",
                message: e.to_string(),
            },
        }
    }
}

impl From<TopologyError> for PipelineError {
    fn from(e: TopologyError) -> Self {
        PipelineError::Validation {
            stage: "topology",
            message: e.to_string(),
        }
    }
}

impl From<ParameterError> for PipelineError {
    fn from(e: ParameterError) -> Self {
        PipelineError::Validation {
            stage: "parameters",
            message: e.to_string(),
        }
    }
}

impl From<DemandError> for PipelineError {
    fn from(e: DemandError) -> Self {
        PipelineError::Validation {
            stage: "demand",
            message: e.to_string(),
        }
    }
}

impl From<ModelFileError> for PipelineError {
    fn from(e: ModelFileError) -> Self {
        PipelineError::Validation {
            stage: "model",
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub fixtures: PathBuf,
    pub hour: u8,
    pub date: Option<NaiveDate>,
    /// Forces the multi-state factors even with a single input.
    pub multi_state: bool,
    pub out_dir: PathBuf,
    pub solve: SolveConfig,
}

impl RunConfig {
    pub fn new(inputs: Vec<PathBuf>, fixtures: PathBuf, out_dir: PathBuf) -> Self {
        RunConfig {
            inputs,
            fixtures,
            hour: DemandOptions::default().hour,
            date: None,
            multi_state: false,
            out_dir,
            solve: SolveConfig::default(),
        }
    }
}

/// Everything a run produced, including partial results on failure.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub model: Option<NetworkModel>,
    pub result: Option<ProgressiveResult>,
    pub timing: Timing,
    pub failure: Option<PipelineError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, PipelineError::exit_code)
    }
}

struct Timer<'a> {
    timing: &'a mut Timing,
}

impl Timer<'_> {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timing.stages_seconds.insert(stage.to_string(), t.elapsed().as_secs_f64());
        out
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn source_name(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Runs every stage in order and writes the artifacts reached. A failed
/// stage leaves the earlier artifacts and an error entry in the report.
pub fn run_pipeline(config: &RunConfig) -> RunOutcome {
    let mut out = RunOutcome {
        report: RunReport {
            inputs: config.inputs.iter().map(|p| file_name(p)).collect(),
            hour: config.hour,
            date: config.date,
            multi_state: config.multi_state || config.inputs.len() > 1,
            ..Default::default()
        },
        model: None,
        result: None,
        timing: Timing::default(),
        failure: None,
    };
    if let Err(e) = std::fs::create_dir_all(&config.out_dir) {
        out.failure = Some(PipelineError::io(&config.out_dir, e));
        return out;
    }
    if let Err(e) = run_stages(config, &mut out) {
        error!("{e}");
        out.report.error = Some(StageFailure {
            stage: e.stage().to_string(),
            message: e.to_string(),
        });
        out.failure = Some(e);
    }
    if let Err(e) = write_run_artifacts(&config.out_dir, &out) {
        out.failure.get_or_insert(e);
    }
    out
}

fn run_stages(config: &RunConfig, out: &mut RunOutcome) -> Result<(), PipelineError> {
    if config.inputs.is_empty() {
        return Err(PipelineError::Validation {
            stage: "ingest",
            message: "no input files".into(),
        });
    }
    let multi_state = out.report.multi_state;
    let mut timing = std::mem::take(&mut out.timing);
    let mut timer = Timer { timing: &mut timing };
    let res = (|| {
        let parsed = timer.time("ingest", || -> Result<_, PipelineError> {
            let mut per_file = Vec::new();
            for p in &config.inputs {
                let bytes = std::fs::read(p).map_err(|e| PipelineError::io(p, e))?;
                let source = source_name(p);
                let (raw, diag) = read_feature_collection(&bytes, Some(&source))?;
                per_file.push((source, raw, diag));
            }
            let (raw, diag, mut merge) = merge_states(per_file);
            merge.multi_state = multi_state;
            let read_skipped = diag.skipped();
            let parsed = partition_features(&raw, diag, &IngestOptions::default());
            out.report.ingest = IngestSummary {
                merge,
                diagnostics: parsed.diagnostics.clone(),
                line_sections: parsed.line_sections.len(),
                facilities: parsed.facilities.len(),
                plant_points: parsed.plant_points.len(),
                discarded: parsed.discarded,
                read_skipped,
            };
            Ok(parsed)
        })?;
        let fixtures = load_fixture_tables(&config.fixtures)?;
        let tables = ParameterTables::load_dir(&config.fixtures)?;

        let topo = timer.time("topology", || {
            build_topology(
                &parsed,
                &fixtures.eia860_plants,
                &TopologyOptions {
                    multi_state,
                    ..Default::default()
                },
            )
        })?;
        out.report.topology = Some(topo.stats.clone());
        out.report.coverage = emit_coverage_diagnostics(&topo.sections, &fixtures.eia_circuit_miles);
        let mut model = topo.model;

        timer.time("parameters", || -> Result<(), PipelineError> {
            assign_network_parameters(&mut model, &tables)?;
            assign_generator_parameters(&mut model, Some(&fixtures), &tables);
            Ok(())
        })?;

        let demand_options = DemandOptions {
            hour: config.hour,
            date: config.date,
            ..Default::default()
        };
        let demand = timer.time("demand", || apply_demand(&mut model, &fixtures, &demand_options, &tables));
        out.report.model = Some(ModelCounts::of(&model));
        out.model = Some(model);
        out.report.demand = Some(demand?);

        let model = out.model.as_ref().expect("model set above");
        let net = to_per_unit(model);
        let result = timer.time("opf", || progressive_solve(&net, &config.solve));
        out.report.opf = Some(OpfSummary::of(&result));
        let ok = result.success(config.solve.dc_only);
        let summary = solve_failure_message(&result, config.solve.dc_only);
        out.result = Some(result);
        if ok {
            Ok(())
        } else {
            Err(PipelineError::Solver(summary))
        }
    })();
    out.timing = timing;
    if let Some(r) = &out.result {
        out.timing.record_attempts(&r.attempts);
    }
    res
}

fn solve_failure_message(r: &ProgressiveResult, dc_only: bool) -> String {
    let describe = |name: &str, s: &Option<OpfSolution>| match s {
        Some(s) => format!("{name} {} at {}", s.status, s.level),
        None => format!("{name} not attempted"),
    };
    if dc_only {
        describe("dc", &r.dc)
    } else {
        format!("{}; {}", describe("dc", &r.dc), describe("ac", &r.ac))
    }
}

fn write_at<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), PipelineError> {
    let p = dir.join(name);
    artifacts::write_json(&p, value).map_err(|e| PipelineError::io(&p, e))
}

/// Writes solution_dc.json and, when attempted, solution_ac.json.
pub fn write_solutions(dir: &Path, result: &ProgressiveResult) -> Result<(), PipelineError> {
    for (name, sol) in [(SOLUTION_DC_FILE, &result.dc), (SOLUTION_AC_FILE, &result.ac)] {
        if let Some(s) = sol {
            let file = SolutionFile {
                solution: s.clone(),
                attempts: result.attempts.clone(),
            };
            write_at(dir, name, &file)?;
        }
    }
    Ok(())
}

fn write_run_artifacts(dir: &Path, out: &RunOutcome) -> Result<(), PipelineError> {
    if let Some(model) = &out.model {
        let net = to_per_unit(model);
        let p = dir.join(MODEL_FILE);
        std::fs::write(&p, matpower::to_string(&net)).map_err(|e| PipelineError::io(&p, e))?;
        let ac = out.result.as_ref().and_then(|r| r.ac.as_ref()).filter(|s| s.status.converged());
        write_at(dir, TOPOLOGY_FILE, &artifacts::topology_geojson(model, ac))?;
    }
    if let Some(r) = &out.result {
        write_solutions(dir, r)?;
    }
    write_at(dir, REPORT_FILE, &out.report)?;
    write_at(dir, TIMING_FILE, &out.timing)?;
    info!("artifacts written to {}", dir.display());
    Ok(())
}

/// Reads a model file, solves it, and writes the solution files next to it.
pub fn solve_model_file(path: &Path, config: &SolveConfig) -> Result<ProgressiveResult, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let net: PuNetwork = matpower::from_str(&text)?;
    let result = progressive_solve(&net, config);
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    write_solutions(dir, &result)?;
    let mut timing = Timing::default();
    timing.record_attempts(&result.attempts);
    write_at(dir, TIMING_FILE, &timing)?;
    if result.success(config.dc_only) {
        Ok(result)
    } else {
        Err(PipelineError::Solver(solve_failure_message(&result, config.dc_only)))
    }
}
