//! Population-weighted load allocation.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;

use crate::geo::Coord;
use crate::ingest::fixtures::CensusTract;
use crate::model::{Bus, Load};

pub const LOAD_POWER_FACTOR: f64 = 0.92;

/// Reactive demand at a fixed power factor.
pub fn reactive_for(p_mw: f64, power_factor: f64) -> f64 {
    p_mw * power_factor.acos().tan()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadSet {
    pub loads: Vec<Load>,
    pub total_mw: f64,
    pub hour: u8,
    pub date: Option<NaiveDate>,
    /// Demand allocated per BA partition.
    pub partitions: BTreeMap<String, f64>,
    /// Buses matched to a tract by the nearest-tract fallback.
    pub nearest_tract_fallbacks: usize,
    /// Partitions whose buses all had zero population (split uniformly).
    pub uniform_partitions: Vec<String>,
}

/// Population of the tract containing `p`, or of the nearest tract.
/// Returns `(population, used_fallback)`.
pub fn tract_population(p: Coord, tracts: &[CensusTract]) -> Option<(f64, bool)> {
    let inside = tracts.iter().find(|t| {
        let (lo, hi) = t.polygon.bbox();
        p.lon >= lo.lon && p.lon <= hi.lon && p.lat >= lo.lat && p.lat <= hi.lat && t.polygon.contains(p)
    });
    if let Some(t) = inside {
        return Some((t.population, false));
    }
    tracts
        .iter()
        .map(|t| (t.polygon.distance(p), t.population))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, pop)| (pop, true))
}

/// Splits each partition's demand over its buses in proportion to tract
/// population. `bus_partition[i]` names the partition of bus `i`.
pub fn allocate_loads(
    demand: &BTreeMap<String, f64>,
    buses: &[Bus],
    bus_partition: &[String],
    tracts: &[CensusTract],
    power_factor: f64,
) -> LoadSet {
    let mut fallbacks = 0;
    let pops: Vec<f64> = buses
        .iter()
        .map(|b| match tract_population(b.coord, tracts) {
            Some((p, fb)) => {
                fallbacks += fb as usize;
                p.max(0.0)
            }
            None => 0.0,
        })
        .collect();
    let mut p = vec![0.0; buses.len()];
    let mut uniform = Vec::new();
    for (part, d) in demand {
        let members: Vec<usize> = (0..buses.len()).filter(|&i| bus_partition[i] == *part).collect();
        if members.is_empty() {
            continue;
        }
        let total: f64 = members.iter().map(|&i| pops[i]).sum();
        if total > 0.0 {
            for &i in &members {
                p[i] = d * pops[i] / total;
            }
        } else {
            uniform.push(part.clone());
            for &i in &members {
                p[i] = d / members.len() as f64;
            }
        }
    }
    let loads: Vec<Load> = p
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| Load {
            bus: i,
            p_mw: *v,
            q_mvar: reactive_for(*v, power_factor),
        })
        .collect();
    LoadSet {
        total_mw: loads.iter().map(|l| l.p_mw).sum(),
        loads,
        hour: 0,
        date: None,
        partitions: demand.clone(),
        nearest_tract_fallbacks: fallbacks,
        uniform_partitions: uniform,
    }
}
