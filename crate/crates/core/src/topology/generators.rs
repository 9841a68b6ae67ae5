//! Plant-to-bus assignment and inventory matching.

use serde::Serialize;

use crate::geo::{haversine_m, Coord};
use crate::ingest::fixtures::Eia860Plant;
use crate::ingest::{Facility, FacilityKind, PlantPoint};
use crate::model::{Bus, GenOrigin, Generator};
use crate::parameters::fuel::{normalize_fuel, DisplayFuel};

pub const MAX_ASSIGN_DISTANCE_M: f64 = 1000.0;
pub const MAX_MATCH_DISTANCE_M: f64 = 5000.0;
pub const INITIAL_DISPATCH_FRACTION: f64 = 0.5;

/// A plant from either a polygon facility or a point feature.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantCandidate {
    pub osm_id: String,
    pub coord: Coord,
    pub name: Option<String>,
    pub output_mw: Option<f64>,
    pub fuel_raw: Option<String>,
    /// Set for polygon plants, which may host buses themselves.
    pub facility_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AssignmentStats {
    pub plants: usize,
    pub assigned: usize,
    pub dropped_no_bus: usize,
    pub dropped_no_capacity: usize,
    pub eia_matched: usize,
}

pub fn plant_candidates(facilities: &[Facility], points: &[PlantPoint]) -> Vec<PlantCandidate> {
    let mut out: Vec<PlantCandidate> = facilities
        .iter()
        .filter(|f| f.kind == FacilityKind::Plant)
        .map(|f| PlantCandidate {
            osm_id: f.id.clone(),
            coord: f.footprint.anchor(),
            name: f.name.clone(),
            output_mw: f.plant_output_mw,
            fuel_raw: f.plant_source.clone(),
            facility_id: Some(f.id.clone()),
        })
        .chain(points.iter().map(|p| PlantCandidate {
            osm_id: p.id.clone(),
            coord: p.coord,
            name: p.name.clone(),
            output_mw: p.output_mw,
            fuel_raw: p.source_fuel.clone(),
            facility_id: None,
        }))
        .collect();
    out.sort_by(|a, b| a.osm_id.cmp(&b.osm_id));
    out
}

/// Nearest bus within [`MAX_ASSIGN_DISTANCE_M`]; ties go to the lower id. A
/// bus inside the plant's own facility is at distance zero.
pub fn nearest_bus(coord: Coord, facility: Option<&str>, buses: &[Bus], max_m: f64) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for b in buses {
        let d = match (facility, b.facility_id.as_deref()) {
            (Some(f), Some(g)) if f == g => 0.0,
            _ => haversine_m(coord, b.coord),
        };
        if d > max_m {
            continue;
        }
        if best.map_or(true, |(bd, bi)| d < bd || (d == bd && b.id < bi)) {
            best = Some((d, b.id));
        }
    }
    best.map(|(_, i)| i)
}

pub fn name_key(name: &str) -> String {
    name.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn names_match(a: &str, b: &str) -> bool {
    let (a, b) = (name_key(a), name_key(b));
    !a.is_empty() && !b.is_empty() && (a == b || a.contains(&b) || b.contains(&a))
}

fn fuels_compatible(a: DisplayFuel, b: DisplayFuel) -> bool {
    a == b || a == DisplayFuel::Unknown || b == DisplayFuel::Unknown
}

/// Inventory record agreeing on name and fuel within 5 km; the closest wins.
pub fn match_eia<'a>(plant: &PlantCandidate, inventory: &'a [Eia860Plant]) -> Option<&'a Eia860Plant> {
    let name = plant.name.as_deref()?;
    let fuel = normalize_fuel(plant.fuel_raw.as_deref().unwrap_or("")).1;
    inventory
        .iter()
        .filter(|e| names_match(name, &e.name))
        .filter(|e| fuels_compatible(fuel, normalize_fuel(&e.fuel_raw).1))
        .map(|e| (haversine_m(plant.coord, e.coord), e))
        .filter(|(d, _)| *d <= MAX_MATCH_DISTANCE_M)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, e)| e)
}

/// Builds one generator per plant with a bus within reach and a known
/// capacity. Costs and limits are filled in by the parameter stage.
pub fn assign_generators(
    plants: &[PlantCandidate],
    buses: &[Bus],
    inventory: &[Eia860Plant],
) -> (Vec<Generator>, AssignmentStats) {
    let mut stats = AssignmentStats {
        plants: plants.len(),
        ..Default::default()
    };
    let mut gens = Vec::new();
    for p in plants {
        let Some(bus) = nearest_bus(p.coord, p.facility_id.as_deref(), buses, MAX_ASSIGN_DISTANCE_M) else {
            stats.dropped_no_bus += 1;
            continue;
        };
        let eia = match_eia(p, inventory);
        let p_max = match eia {
            Some(e) => Some(e.capacity_mw),
            None => p.output_mw,
        };
        let Some(p_max) = p_max.filter(|v| *v > 0.0) else {
            stats.dropped_no_capacity += 1;
            continue;
        };
        if eia.is_some() {
            stats.eia_matched += 1;
        }
        let fuel_raw = p.fuel_raw.clone().or_else(|| eia.map(|e| e.fuel_raw.clone()));
        let (tech, display) = normalize_fuel(fuel_raw.as_deref().unwrap_or(""));
        gens.push(Generator {
            id: gens.len(),
            bus,
            name: p.name.clone(),
            osm_id: Some(p.osm_id.clone()),
            fuel_raw,
            tech,
            display,
            p_max_mw: p_max,
            p_avail_mw: p_max,
            p_min_mw: 0.0,
            q_min_mvar: 0.0,
            q_max_mvar: 0.0,
            c2: 0.0,
            c1: 0.0,
            c0: 0.0,
            startup_usd: 0.0,
            heat_rate: None,
            eia_name: eia.map(|e| e.name.clone()),
            eia_matched: eia.is_some(),
            p_set_mw: INITIAL_DISPATCH_FRACTION * p_max,
            committed: true,
            origin: GenOrigin::Osm,
        });
        stats.assigned += 1;
    }
    (gens, stats)
}
