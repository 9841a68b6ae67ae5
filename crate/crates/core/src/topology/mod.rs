//! Bus-branch network reconstruction from parsed features.

pub mod buses;
pub mod circuits;
pub mod classify;
pub mod finalize;
pub mod footprint;
pub mod generators;
pub mod hvdc;
pub mod merge;
pub mod voltage;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use buses::{create_buses, infer_transformers, BusPlan};
pub use circuits::{resolve_circuit_counts, CircuitMode, ResolvedCircuits};
pub use classify::{classify_circuits, CircuitClass, CircuitRecord};
pub use finalize::{finalize_network, FinalizeStats};
pub use footprint::{build_endpoint_index, build_facility_footprints, EndpointIndex, FootprintIndex};
pub use generators::{assign_generators, AssignmentStats};
pub use hvdc::{build_dclinks, detect_hvdc_links, HvdcConfig};
pub use merge::{merge_lines, MergedGroup};
pub use voltage::{filter_transmission, infer_voltages, FilterStats, InferenceStats};

use crate::ingest::fixtures::Eia860Plant;
use crate::ingest::{FacilityKind, LineSection, ParsedFeatures};
use crate::model::{Branch, BranchKind, NetworkModel, S_BASE_MVA};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("no bus survives network validation")]
    EmptyNetwork,
    #[error("the network has no generators")]
    NoGenerators,
}

#[derive(Debug, Clone, Default)]
pub struct TopologyOptions {
    pub circuit_mode: CircuitMode,
    pub hvdc: HvdcConfig,
    pub multi_state: bool,
}

/// Step counts for one build.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TopologyStats {
    pub input_sections: usize,
    pub facilities: usize,
    pub inference: InferenceStats,
    pub filter: FilterStats,
    pub circuits_resolved: usize,
    pub cables_not_divisible: usize,
    pub merged_groups: usize,
    pub circuit_records: usize,
    pub classes: BTreeMap<CircuitClass, usize>,
    pub hvdc_promoted: usize,
    pub buses_created: usize,
    pub ac_lines: usize,
    pub transformers_structural: usize,
    pub transformers_catch_all: usize,
    pub dclinks: usize,
    pub generators: AssignmentStats,
    pub finalize: FinalizeStats,
}

#[derive(Debug, Clone)]
pub struct TopologyResult {
    pub model: NetworkModel,
    /// Transmission sections after inference and filtering.
    pub sections: Vec<LineSection>,
    pub circuits: Vec<CircuitRecord>,
    pub stats: TopologyStats,
}

fn transformer(id: usize, from: usize, to: usize, hv_kv: f64, lv_kv: f64, key: Option<String>) -> Branch {
    Branch {
        id,
        from_bus: from,
        to_bus: to,
        kind: BranchKind::Transformer,
        r_pu: 0.0,
        x_pu: 0.0,
        b_pu: 0.0,
        rate_mva: 0.0,
        angle_limit_deg: 0.0,
        length_km: None,
        voltage_kv: hv_kv,
        lv_kv: Some(lv_kv),
        underground: false,
        circuit_key: key,
    }
}

/// Runs every reconstruction step from voltage inference to validation.
/// Electrical parameters are left at zero for the parameter stage.
pub fn build_topology(
    features: &ParsedFeatures,
    inventory: &[Eia860Plant],
    options: &TopologyOptions,
) -> Result<TopologyResult, TopologyError> {
    let mut stats = TopologyStats {
        input_sections: features.line_sections.len(),
        facilities: features.facilities.len(),
        ..Default::default()
    };
    let facilities = &features.facilities;
    let footprints = build_facility_footprints(facilities);

    let mut sections = features.line_sections.clone();
    sections.sort_by(|a, b| a.id.cmp(&b.id));
    stats.inference = infer_voltages(&mut sections, facilities, &footprints);
    let (sections, filter) = filter_transmission(sections);
    stats.filter = filter;

    let resolved: Vec<ResolvedCircuits> = sections
        .iter()
        .map(|s| resolve_circuit_counts(s, options.circuit_mode))
        .collect();
    stats.circuits_resolved = resolved.iter().map(|r| r.circuits.len()).sum();
    stats.cables_not_divisible = resolved.iter().filter(|r| r.cables_not_divisible).count();

    let index = build_endpoint_index(&sections, &footprints);
    let groups = merge_lines(&sections, &resolved, &index);
    stats.merged_groups = groups.len();
    let mut circuits = classify_circuits(&groups, &footprints);
    stats.circuit_records = circuits.len();
    stats.classes = classify::class_counts(&circuits);
    stats.hvdc_promoted = detect_hvdc_links(&mut circuits, facilities, &options.hvdc);

    let plan = create_buses(&circuits, facilities);
    stats.buses_created = plan.buses.len();

    let mut branches: Vec<Branch> = Vec::new();
    for (c, t) in circuits.iter().zip(&plan.circuit_buses) {
        let Some((a, b)) = *t else { continue };
        if c.is_hvdc || c.length_km <= 0.0 {
            continue;
        }
        let (ka, kb) = (plan.buses[a].base_kv, plan.buses[b].base_kv);
        let id = branches.len();
        if ka.max(kb) / ka.min(kb) > buses::CATCH_ALL_RATIO {
            let (hv, lv) = if ka >= kb { (a, b) } else { (b, a) };
            branches.push(transformer(id, hv, lv, ka.max(kb), ka.min(kb), Some(c.key.clone())));
            stats.transformers_catch_all += 1;
        } else {
            branches.push(Branch {
                id,
                from_bus: a,
                to_bus: b,
                kind: BranchKind::AcLine,
                r_pu: 0.0,
                x_pu: 0.0,
                b_pu: 0.0,
                rate_mva: 0.0,
                angle_limit_deg: 0.0,
                length_km: Some(c.length_km),
                voltage_kv: c.voltage_kv,
                lv_kv: None,
                underground: c.underground,
                circuit_key: Some(c.key.clone()),
            });
            stats.ac_lines += 1;
        }
    }
    for (hv, lv) in infer_transformers(&plan, facilities) {
        let (kh, kl) = (plan.buses[hv].base_kv, plan.buses[lv].base_kv);
        branches.push(transformer(branches.len(), hv, lv, kh, kl, None));
        stats.transformers_structural += 1;
    }

    let mut has_ac = vec![false; plan.buses.len()];
    for br in &branches {
        has_ac[br.from_bus] = true;
        has_ac[br.to_bus] = true;
    }
    let dclinks = build_dclinks(&circuits, &plan.circuit_buses, &plan.buses, &has_ac, &options.hvdc);
    stats.dclinks = dclinks.len();

    let plants = generators::plant_candidates(facilities, &features.plant_points);
    let (gens, gstats) = assign_generators(&plants, &plan.buses, inventory);
    stats.generators = gstats;

    let levels: Vec<Vec<usize>> = plan
        .clusters
        .iter()
        .filter(|c| {
            c.facility
                .map(|f| facilities[f].kind != FacilityKind::Converter)
                .unwrap_or(false)
        })
        .filter(|c| c.buses.len() > 1)
        .map(|c| c.buses.clone())
        .collect();

    let model = NetworkModel {
        base_mva: S_BASE_MVA,
        multi_state: options.multi_state,
        buses: plan.buses,
        branches,
        dclinks,
        generators: gens,
        loads: Vec::new(),
        shunts: Vec::new(),
    };
    let (model, fstats) = finalize_network(model, &levels)?;
    stats.finalize = fstats;
    Ok(TopologyResult {
        model,
        sections,
        circuits,
        stats,
    })
}
