//! Balancing-authority detection and regional demand fractions.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::DemandError;
use crate::geo::{Coord, Polygon};
use crate::ingest::FixtureTables;
use crate::model::NetworkModel;

/// Secondary BAs need more than this share of buses.
pub const MIN_SECONDARY_SHARE: f64 = 0.01;
/// Fractions outside `[0, 1.5]` are clamped and reported.
pub const MAX_FRACTION: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    SingleBa,
    MultiBa,
    Region,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaAssignment {
    /// Demand-publishing BA per bus (after parent resolution and folding).
    pub bus_ba: Vec<String>,
    pub primary_ba: String,
    pub secondary_bas: Vec<String>,
    /// BAs found but folded into the primary.
    pub dropped_bas: Vec<String>,
    /// Bus share b_k per retained BA.
    pub shares: BTreeMap<String, f64>,
    /// Buses outside every polygon, assigned to the nearest one.
    pub nearest_fallbacks: usize,
    pub scope: Scope,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionalFractions {
    pub fractions: BTreeMap<String, f64>,
    /// OSM coverage factor (multi-BA single-state case only).
    pub c_osm: Option<f64>,
    /// Coverage multiplier per multi-state BA (region case only).
    pub coverage: BTreeMap<String, f64>,
    /// BAs whose raw fraction left the sanity band.
    pub clamped: Vec<String>,
}

fn polygon_ba(p: Coord, polys: &[(String, &Polygon)]) -> Option<String> {
    polys
        .iter()
        .filter(|(_, poly)| poly.contains(p))
        .min_by(|a, b| a.1.area_deg2().total_cmp(&b.1.area_deg2()).then(a.0.cmp(&b.0)))
        .map(|(c, _)| c.clone())
}

fn nearest_ba(p: Coord, polys: &[(String, &Polygon)]) -> Option<String> {
    polys
        .iter()
        .map(|(c, poly)| (poly.distance(p), c))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)))
        .map(|(_, c)| c.clone())
}

/// Assigns every bus to a BA by point-in-polygon (smallest containing
/// polygon, nearest polygon as fallback), resolves sub-BAs to their parent,
/// and folds minor BAs into the primary.
pub fn detect_balancing_authorities(
    model: &NetworkModel,
    fixtures: &FixtureTables,
) -> Result<BaAssignment, DemandError> {
    let polys: Vec<(String, &Polygon)> = fixtures
        .ba_polygons
        .iter()
        .flat_map(|(c, ps)| ps.iter().map(move |p| (c.clone(), p)))
        .collect();
    if polys.is_empty() {
        return Err(DemandError::NoBaPolygons);
    }
    let mut fallbacks = 0;
    let raw: Vec<String> = model
        .buses
        .iter()
        .map(|b| {
            polygon_ba(b.coord, &polys).unwrap_or_else(|| {
                fallbacks += 1;
                nearest_ba(b.coord, &polys).expect("polygons exist")
            })
        })
        .map(|c| fixtures.resolve_ba(&c))
        .collect();

    let n = raw.len().max(1) as f64;
    let mut count: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &raw {
        *count.entry(c).or_default() += 1;
    }
    let primary = count
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(c, _)| c.to_string())
        .ok_or(DemandError::EmptyModel)?;
    let has_gen = model.has_generator();
    let mut secondary = Vec::new();
    let mut dropped = Vec::new();
    for (c, k) in &count {
        if *c == primary {
            continue;
        }
        let gen_present = raw.iter().zip(&has_gen).any(|(r, g)| r == c && *g);
        if *k as f64 / n > MIN_SECONDARY_SHARE && gen_present {
            secondary.push(c.to_string());
        } else {
            dropped.push(c.to_string());
        }
    }
    let bus_ba: Vec<String> = raw
        .into_iter()
        .map(|c| if dropped.contains(&c) { primary.clone() } else { c })
        .collect();
    let mut shares = BTreeMap::new();
    for c in &bus_ba {
        *shares.entry(c.clone()).or_insert(0.0) += 1.0 / n;
    }
    Ok(BaAssignment {
        bus_ba,
        primary_ba: primary,
        scope: if secondary.is_empty() { Scope::SingleBa } else { Scope::MultiBa },
        secondary_bas: secondary,
        dropped_bas: dropped,
        shares,
        nearest_fallbacks: fallbacks,
    })
}

/// Inventory capacity located inside a BA's polygons.
pub fn ba_inventory_capacity(ba: &str, fixtures: &FixtureTables) -> f64 {
    let polys: Vec<&Polygon> = fixtures
        .ba_polygons
        .iter()
        .filter(|(c, _)| fixtures.resolve_ba(c) == ba)
        .flat_map(|(_, ps)| ps.iter())
        .collect();
    fixtures
        .eia860_plants
        .iter()
        .filter(|p| polys.iter().any(|poly| poly.contains(p.coord)))
        .map(|p| p.capacity_mw)
        .sum()
}

fn state_peak(fixtures: &FixtureTables, state: &str) -> Result<f64, DemandError> {
    fixtures
        .state_peaks
        .get(state)
        .copied()
        .ok_or_else(|| DemandError::MissingStatePeak(state.to_string()))
}

fn ba_peak(fixtures: &FixtureTables, ba: &str) -> Result<f64, DemandError> {
    match fixtures.ba_peak(ba) {
        Some(p) if p > 0.0 => Ok(p),
        _ => Err(DemandError::MissingBaPeak(ba.to_string())),
    }
}

/// The modelled states: bus extract labels, or the only state in the
/// fixtures when buses carry none.
pub fn model_states(model: &NetworkModel, fixtures: &FixtureTables) -> BTreeSet<String> {
    let s: BTreeSet<String> = model.buses.iter().filter_map(|b| b.state.clone()).collect();
    if s.is_empty() && fixtures.state_peaks.len() == 1 {
        return fixtures.state_peaks.keys().cloned().collect();
    }
    s
}

/// Regional fraction per retained BA for the three model scopes.
pub fn compute_regional_fractions(
    assignment: &mut BaAssignment,
    model: &NetworkModel,
    fixtures: &FixtureTables,
    multi_state: bool,
) -> Result<RegionalFractions, DemandError> {
    let states = model_states(model, fixtures);
    let mut out = RegionalFractions {
        fractions: BTreeMap::new(),
        c_osm: None,
        coverage: BTreeMap::new(),
        clamped: Vec::new(),
    };
    if multi_state || states.len() > 1 {
        assignment.scope = Scope::Region;
        for ba in assignment.shares.keys() {
            let bus_states: BTreeSet<String> = model
                .buses
                .iter()
                .zip(&assignment.bus_ba)
                .filter(|(_, c)| *c == ba)
                .filter_map(|(b, _)| b.state.clone())
                .collect();
            let served = fixtures.ba_states.get(ba);
            let s_k: BTreeSet<String> = match served {
                Some(s) => s.intersection(&states).cloned().collect(),
                None => bus_states.clone(),
            };
            let multi = served.map(|s| s.len() > 1).unwrap_or(bus_states.len() > 1);
            let mut peak_sum = 0.0;
            for s in &s_k {
                peak_sum += state_peak(fixtures, s)?;
            }
            let mut f = peak_sum / ba_peak(fixtures, ba)?;
            if multi {
                let p_model: f64 = model
                    .generators
                    .iter()
                    .filter(|g| assignment.bus_ba[g.bus] == *ba)
                    .map(|g| g.p_max_mw)
                    .sum();
                let p_ba = ba_inventory_capacity(ba, fixtures);
                let cov = if p_ba > 0.0 { (p_model / p_ba).min(1.0) } else { 1.0 };
                out.coverage.insert(ba.clone(), cov);
                f *= cov;
            }
            out.fractions.insert(ba.clone(), f);
        }
    } else {
        let state = states
            .iter()
            .next()
            .cloned()
            .ok_or_else(|| DemandError::MissingStatePeak("<unlabelled>".into()))?;
        let peak = state_peak(fixtures, &state)?;
        if assignment.scope == Scope::SingleBa {
            let ba = assignment.primary_ba.clone();
            out.fractions.insert(ba.clone(), peak / ba_peak(fixtures, &ba)?);
        } else {
            let c_osm = if peak > 0.0 {
                (model.total_p_max_mw() / peak).min(1.0)
            } else {
                1.0
            };
            out.c_osm = Some(c_osm);
            for (ba, b_k) in &assignment.shares {
                let f = peak * b_k / ba_peak(fixtures, ba)? * c_osm;
                out.fractions.insert(ba.clone(), f);
            }
        }
    }
    for (ba, f) in out.fractions.iter_mut() {
        if !(0.0..=MAX_FRACTION).contains(f) {
            out.clamped.push(ba.clone());
            *f = f.clamp(0.0, MAX_FRACTION);
        }
    }
    Ok(out)
}
