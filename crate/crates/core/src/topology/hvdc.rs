//! HVDC circuits as controllable transport links.

use serde::Deserialize;

use super::classify::{CircuitClass, CircuitRecord};
use crate::geo::{haversine_m, Coord};
use crate::ingest::{Facility, FacilityKind, Footprint};
use crate::model::{Bus, DcLink};

const HVDC_CONFIG: &str = include_str!("../../data/hvdc.toml");

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct HvdcRating {
    pub min_kv: f64,
    pub p_max_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HvdcConfig {
    pub converter_radius_m: f64,
    pub terminal_relocation_m: f64,
    pub loss_l0_mw: f64,
    pub loss_l1: f64,
    /// Reactive capability of each terminal as a fraction of `p_max`.
    pub q_frac: f64,
    pub rating: Vec<HvdcRating>,
}

impl Default for HvdcConfig {
    fn default() -> Self {
        toml::from_str(HVDC_CONFIG).expect("bundled hvdc.toml is valid")
    }
}

impl HvdcConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Transfer limit by voltage class: the first rating whose threshold the
    /// voltage reaches, scanning from the highest.
    pub fn p_max_mw(&self, kv: f64) -> f64 {
        let mut r = self.rating.clone();
        r.sort_by(|a, b| b.min_kv.total_cmp(&a.min_kv));
        r.iter()
            .find(|r| kv >= r.min_kv)
            .map(|r| r.p_max_mw)
            .unwrap_or(1000.0)
    }
}

/// Ground distance from `p` to a converter station (zero inside a polygon).
fn converter_distance_m(p: Coord, f: &Facility) -> f64 {
    match &f.footprint {
        Footprint::Polygon(poly) if poly.contains(p) => 0.0,
        fp => haversine_m(p, fp.anchor()),
    }
}

/// Post-pass: AC circuits with both ends near a converter station are
/// re-flagged as HVDC. Returns the number promoted.
pub fn detect_hvdc_links(
    circuits: &mut [CircuitRecord],
    facilities: &[Facility],
    config: &HvdcConfig,
) -> usize {
    let converters: Vec<&Facility> = facilities
        .iter()
        .filter(|f| f.kind == FacilityKind::Converter)
        .collect();
    if converters.is_empty() {
        return 0;
    }
    let near = |p: Coord| {
        converters
            .iter()
            .any(|f| converter_distance_m(p, f) <= config.converter_radius_m)
    };
    let mut promoted = 0;
    for c in circuits.iter_mut() {
        if c.is_hvdc || matches!(c.classification, CircuitClass::Loop | CircuitClass::SelfLoop) {
            continue;
        }
        let (a, b) = c.endpoint_coords();
        if near(a) && near(b) {
            c.is_hvdc = true;
            promoted += 1;
        }
    }
    promoted
}

/// Nearest bus with an AC branch within the relocation radius (ties: lower id).
fn relocate(bus: usize, buses: &[Bus], has_ac: &[bool], radius_m: f64) -> Option<usize> {
    if has_ac[bus] {
        return Some(bus);
    }
    let from = buses[bus].coord;
    buses
        .iter()
        .filter(|b| has_ac[b.id])
        .map(|b| (haversine_m(from, b.coord), b.id))
        .filter(|(d, _)| *d <= radius_m)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
}

/// One link per HVDC circuit with distinct terminals. Terminals on buses
/// without AC branches move to the nearest AC bus; links that cannot be
/// anchored are skipped.
pub fn build_dclinks(
    circuits: &[CircuitRecord],
    terminals: &[Option<(usize, usize)>],
    buses: &[Bus],
    has_ac: &[bool],
    config: &HvdcConfig,
) -> Vec<DcLink> {
    let mut out = Vec::new();
    for (c, t) in circuits.iter().zip(terminals) {
        let (true, Some((a, b))) = (c.is_hvdc, *t) else { continue };
        let r = config.terminal_relocation_m;
        let (Some(a), Some(b)) = (relocate(a, buses, has_ac, r), relocate(b, buses, has_ac, r)) else {
            continue;
        };
        if a == b {
            continue;
        }
        let p_max = config.p_max_mw(c.voltage_kv);
        out.push(DcLink {
            id: out.len(),
            from_bus: a,
            to_bus: b,
            voltage_kv: c.voltage_kv,
            p_max_mw: p_max,
            loss_l0_mw: config.loss_l0_mw,
            loss_l1: config.loss_l1,
            q_min_mvar: -config.q_frac * p_max,
            q_max_mvar: config.q_frac * p_max,
            circuit_key: c.key.clone(),
        });
    }
    out
}
