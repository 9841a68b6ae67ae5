//! Classification of merged groups by what their endpoints touch.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use super::footprint::FootprintIndex;
use super::merge::MergedGroup;
use crate::geo::{Coord, SnappedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitClass {
    InterFacility,
    Loop,
    SelfLoop,
    SingleFacility,
    Isolated,
    Tap,
}

impl CircuitClass {
    pub const ALL: [CircuitClass; 6] = [
        CircuitClass::InterFacility,
        CircuitClass::Loop,
        CircuitClass::SelfLoop,
        CircuitClass::SingleFacility,
        CircuitClass::Isolated,
        CircuitClass::Tap,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitRecord {
    pub key: String,
    pub group_key: String,
    pub section_ids: Vec<String>,
    pub endpoints: (SnappedPoint, SnappedPoint),
    pub endpoint_facilities: (Option<String>, Option<String>),
    #[serde(skip)]
    pub endpoint_facility_idx: (Option<usize>, Option<usize>),
    pub voltage_kv: f64,
    pub classification: CircuitClass,
    pub is_hvdc: bool,
    pub length_km: f64,
    pub underground: bool,
    pub voltage_inferred: bool,
    pub name: Option<String>,
    pub source: Option<String>,
    #[serde(skip)]
    pub path: Vec<Coord>,
}

impl CircuitRecord {
    pub fn endpoint_coords(&self) -> (Coord, Coord) {
        (self.endpoints.0.to_coord(), self.endpoints.1.to_coord())
    }
}

/// Classifies one group given the facilities at its ends.
pub fn classify_group(
    group: &MergedGroup,
    facilities: (Option<usize>, Option<usize>),
    is_tap: bool,
) -> CircuitClass {
    let mut seen = HashSet::new();
    if !group.section_ids.iter().all(|s| seen.insert(s.as_str())) {
        return CircuitClass::SelfLoop;
    }
    if group.is_cycle {
        return CircuitClass::Loop;
    }
    match facilities {
        (Some(a), Some(b)) if a != b => CircuitClass::InterFacility,
        (Some(_), Some(_)) => CircuitClass::Loop,
        _ if is_tap => CircuitClass::Tap,
        (Some(_), None) | (None, Some(_)) => CircuitClass::SingleFacility,
        (None, None) => CircuitClass::Isolated,
    }
}

/// Classifies every group and expands it into one record per parallel
/// circuit.
pub fn classify_circuits(groups: &[MergedGroup], footprints: &FootprintIndex) -> Vec<CircuitRecord> {
    let mut interior: HashMap<SnappedPoint, Vec<usize>> = HashMap::new();
    for (gi, g) in groups.iter().enumerate() {
        if g.path.len() > 2 {
            for c in &g.path[1..g.path.len() - 1] {
                interior.entry(c.snap()).or_default().push(gi);
            }
        }
    }
    let mut out = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        let fa = footprints.query(g.endpoints.0.to_coord());
        let fb = footprints.query(g.endpoints.1.to_coord());
        let dangling_tap = |p: SnappedPoint, f: Option<usize>| {
            f.is_none()
                && interior
                    .get(&p)
                    .map(|v| v.iter().any(|&o| o != gi))
                    .unwrap_or(false)
        };
        let is_tap = dangling_tap(g.endpoints.0, fa) || dangling_tap(g.endpoints.1, fb);
        let class = classify_group(g, (fa, fb), is_tap);
        let names = (
            fa.map(|f| footprints.id(f).to_string()),
            fb.map(|f| footprints.id(f).to_string()),
        );
        for k in 0..g.multiplicity.max(1) {
            out.push(CircuitRecord {
                key: format!("{}#{k}", g.key),
                group_key: g.key.clone(),
                section_ids: g.section_ids.clone(),
                endpoints: g.endpoints,
                endpoint_facilities: names.clone(),
                endpoint_facility_idx: (fa, fb),
                voltage_kv: g.voltage_kv,
                classification: class,
                is_hvdc: g.is_hvdc,
                length_km: g.length_km,
                underground: g.underground,
                voltage_inferred: g.voltage_inferred,
                name: g.name.clone(),
                source: g.source.clone(),
                path: g.path.clone(),
            });
        }
    }
    out
}

/// Number of groups (not circuits) per class.
pub fn class_counts(records: &[CircuitRecord]) -> BTreeMap<CircuitClass, usize> {
    let mut seen = HashSet::new();
    let mut counts: BTreeMap<CircuitClass, usize> =
        CircuitClass::ALL.iter().map(|c| (*c, 0)).collect();
    for r in records {
        if seen.insert(r.group_key.as_str()) {
            *counts.entry(r.classification).or_default() += 1;
        }
    }
    counts
}
