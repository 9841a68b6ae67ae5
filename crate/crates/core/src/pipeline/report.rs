//! Run report and solution file layouts.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::coverage::CoverageRow;
use super::merge::MergeReport;
use crate::demand::DemandReport;
use crate::ingest::IngestDiagnostics;
use crate::model::{BranchKind, NetworkModel};
use crate::opf::precondition::{DecommitReport, ShuntReport};
use crate::opf::{Attempt, Formulation, Level, OpfSolution, ProgressiveResult, Status};
use crate::topology::TopologyStats;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestSummary {
    pub merge: MergeReport,
    pub diagnostics: IngestDiagnostics,
    pub line_sections: usize,
    pub facilities: usize,
    pub plant_points: usize,
    pub discarded: usize,
    /// Features rejected by the reader before merging.
    pub read_skipped: usize,
}

impl IngestSummary {
    /// Every input feature is kept, dropped as a duplicate, or discarded.
    pub fn conserved(&self) -> bool {
        self.merge.total_read + self.read_skipped
            == self.line_sections + self.facilities + self.plant_points + self.discarded + self.merge.duplicates_removed
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelCounts {
    pub buses: usize,
    pub ac_lines: usize,
    pub transformers: usize,
    pub bridges: usize,
    pub dclinks: usize,
    pub generators: usize,
    pub injected_generators: usize,
    pub loads: usize,
    pub load_mw: f64,
    pub capacity_mw: f64,
}

impl ModelCounts {
    pub fn of(model: &NetworkModel) -> Self {
        let kind = |k: BranchKind| model.branches.iter().filter(|b| b.kind == k).count();
        ModelCounts {
            buses: model.buses.len(),
            ac_lines: kind(BranchKind::AcLine),
            transformers: kind(BranchKind::Transformer),
            bridges: kind(BranchKind::Bridge),
            dclinks: model.dclinks.len(),
            generators: model.generators.len(),
            injected_generators: model
                .generators
                .iter()
                .filter(|g| g.origin == crate::model::GenOrigin::Injected)
                .count(),
            loads: model.loads.len(),
            load_mw: model.total_load_mw(),
            capacity_mw: model.total_p_max_mw(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub formulation: Formulation,
    pub status: Status,
    pub level: Level,
    pub ac1: bool,
    pub objective_usd_per_hr: f64,
    pub cost_usd_per_mwh: f64,
    pub demand_mw: f64,
    pub served_load_mw: f64,
    pub total_loss_mw: f64,
    pub loss_pct: f64,
    pub iterations: usize,
}

impl SolveSummary {
    pub fn of(s: &OpfSolution) -> Self {
        SolveSummary {
            formulation: s.formulation,
            status: s.status,
            level: s.level,
            ac1: s.ac1,
            objective_usd_per_hr: s.objective_usd_per_hr,
            cost_usd_per_mwh: s.cost_per_mwh(),
            demand_mw: s.demand_mw,
            served_load_mw: s.served_load_mw,
            total_loss_mw: s.total_loss_mw,
            loss_pct: s.loss_pct,
            iterations: s.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpfSummary {
    pub attempts: Vec<Attempt>,
    pub dc: Option<SolveSummary>,
    pub ac: Option<SolveSummary>,
    pub decommit: DecommitReport,
    pub shunts: ShuntReport,
    pub impedance_capped: usize,
}

impl OpfSummary {
    pub fn of(r: &ProgressiveResult) -> Self {
        OpfSummary {
            attempts: r.attempts.clone(),
            dc: r.dc.as_ref().map(SolveSummary::of),
            ac: r.ac.as_ref().map(SolveSummary::of),
            decommit: r.decommit.clone(),
            shunts: r.shunts.clone(),
            impedance_capped: r.impedance_capped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub inputs: Vec<String>,
    pub hour: u8,
    pub date: Option<NaiveDate>,
    pub multi_state: bool,
    pub ingest: IngestSummary,
    pub topology: Option<TopologyStats>,
    pub model: Option<ModelCounts>,
    pub demand: Option<DemandReport>,
    pub coverage: Vec<CoverageRow>,
    pub opf: Option<OpfSummary>,
    pub error: Option<StageFailure>,
}

/// Solution file: the solution fields plus the full attempt log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    #[serde(flatten)]
    pub solution: OpfSolution,
    pub attempts: Vec<Attempt>,
}

/// Wall-clock timings, kept out of the deterministic artifacts.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    pub stages_seconds: BTreeMap<String, f64>,
    pub attempts: Vec<AttemptTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptTiming {
    pub formulation: Formulation,
    pub level: Level,
    pub ac1: bool,
    pub seconds: f64,
}

impl Timing {
    pub fn record_attempts(&mut self, attempts: &[Attempt]) {
        self.attempts = attempts
            .iter()
            .map(|a| AttemptTiming {
                formulation: a.formulation,
                level: a.level,
                ac1: a.ac1,
                seconds: a.seconds,
            })
            .collect();
    }
}
