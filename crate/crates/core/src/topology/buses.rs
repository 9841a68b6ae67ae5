//! Bus creation from circuit endpoints and structural transformer inference.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::classify::{CircuitClass, CircuitRecord};
use crate::geo::{planar_distance, Coord, SnappedPoint};
use crate::ingest::{Facility, FacilityKind};
use crate::model::Bus;
use crate::union_find::UnionFind;

/// Clustering radius for endpoints outside any facility (degrees, about 50 m).
pub const ADHOC_CLUSTER_DEG: f64 = 0.0005;
/// Voltages whose ratio exceeds this get separate buses within a cluster.
pub const LEVEL_SPLIT_RATIO: f64 = 1.2;
/// Structural transformer thresholds: both must be exceeded.
pub const TRANSFORMER_MIN_DIFF_KV: f64 = 10.0;
pub const TRANSFORMER_MIN_RATIO: f64 = 1.2;
/// Residual AC branches across a larger base-voltage ratio become transformers.
pub const CATCH_ALL_RATIO: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ClusterKey {
    Facility(String),
    Adhoc(SnappedPoint),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub key: ClusterKey,
    pub facility: Option<usize>,
    /// Bus ids, highest voltage level first.
    pub buses: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BusPlan {
    pub buses: Vec<Bus>,
    pub clusters: Vec<Cluster>,
    /// Terminal buses per circuit (`None` for circuits that form no branch).
    pub circuit_buses: Vec<Option<(usize, usize)>>,
}

/// Whether a circuit contributes to the bus-branch network.
pub fn forms_branch(c: &CircuitRecord) -> bool {
    if c.is_hvdc {
        !matches!(c.classification, CircuitClass::Loop | CircuitClass::SelfLoop)
    } else {
        c.classification == CircuitClass::InterFacility
    }
}

fn kv_key(v: f64) -> i64 {
    (v * 1000.0).round() as i64
}

/// Greedy voltage levels from the highest: a voltage joins the current level
/// while `rep / v ≤ 1.2`, where `rep` is the level's highest voltage.
pub fn voltage_levels(voltages: &[f64]) -> Vec<Vec<f64>> {
    let mut v: Vec<f64> = voltages.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup_by(|a, b| kv_key(*a) == kv_key(*b));
    let mut levels: Vec<Vec<f64>> = Vec::new();
    for x in v {
        match levels.last_mut() {
            Some(l) if l[0] / x <= LEVEL_SPLIT_RATIO => l.push(x),
            _ => levels.push(vec![x]),
        }
    }
    levels
}

fn cell(p: Coord) -> (i64, i64) {
    (
        (p.lon / ADHOC_CLUSTER_DEG).floor() as i64,
        (p.lat / ADHOC_CLUSTER_DEG).floor() as i64,
    )
}

/// Union-find clustering of points within [`ADHOC_CLUSTER_DEG`].
pub fn cluster_points(points: &[SnappedPoint]) -> Vec<Vec<usize>> {
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell(p.to_coord())).or_default().push(i);
    }
    let mut uf = UnionFind::new(points.len());
    for (i, p) in points.iter().enumerate() {
        let c = p.to_coord();
        let (cx, cy) = cell(c);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = grid.get(&(cx + dx, cy + dy)) {
                    for &j in v {
                        if j > i && planar_distance(c, points[j].to_coord()) <= ADHOC_CLUSTER_DEG {
                            uf.union(i, j);
                        }
                    }
                }
            }
        }
    }
    uf.groups()
}

/// Creates one bus per (cluster, voltage level) over the circuits that form
/// branches. Endpoints inside a facility cluster by facility; the rest by
/// proximity.
pub fn create_buses(circuits: &[CircuitRecord], facilities: &[Facility]) -> BusPlan {
    // endpoint → cluster key
    let mut loose: Vec<SnappedPoint> = Vec::new();
    for c in circuits.iter().filter(|c| forms_branch(c)) {
        for (p, f) in [
            (c.endpoints.0, c.endpoint_facility_idx.0),
            (c.endpoints.1, c.endpoint_facility_idx.1),
        ] {
            if f.is_none() {
                loose.push(p);
            }
        }
    }
    loose.sort();
    loose.dedup();
    let mut loose_key: HashMap<SnappedPoint, SnappedPoint> = HashMap::new();
    let mut loose_members: BTreeMap<SnappedPoint, Vec<SnappedPoint>> = BTreeMap::new();
    for group in cluster_points(&loose) {
        let rep = loose[group[0]];
        for &i in &group {
            loose_key.insert(loose[i], rep);
            loose_members.entry(rep).or_default().push(loose[i]);
        }
    }
    let key_of = |p: SnappedPoint, f: Option<usize>| match f {
        Some(f) => ClusterKey::Facility(facilities[f].id.clone()),
        None => ClusterKey::Adhoc(loose_key[&p]),
    };

    let mut voltages: BTreeMap<ClusterKey, (Option<usize>, Vec<f64>, Option<String>)> = BTreeMap::new();
    for c in circuits.iter().filter(|c| forms_branch(c)) {
        for (p, f) in [
            (c.endpoints.0, c.endpoint_facility_idx.0),
            (c.endpoints.1, c.endpoint_facility_idx.1),
        ] {
            let e = voltages.entry(key_of(p, f)).or_insert((f, Vec::new(), None));
            e.1.push(c.voltage_kv);
            if e.2.is_none() {
                e.2 = f.and_then(|f| facilities[f].source.clone()).or(c.source.clone());
            }
        }
    }

    let mut plan = BusPlan::default();
    let mut level_of: HashMap<(ClusterKey, i64), usize> = HashMap::new();
    for (key, (facility, kvs, source)) in voltages {
        let coord = match (&key, facility) {
            (_, Some(f)) => facilities[f].footprint.anchor(),
            (ClusterKey::Adhoc(rep), None) => {
                let m = &loose_members[rep];
                let n = m.len() as f64;
                let (x, y) = m.iter().fold((0.0, 0.0), |(x, y), p| {
                    let c = p.to_coord();
                    (x + c.lon, y + c.lat)
                });
                Coord::new(x / n, y / n)
            }
            (ClusterKey::Facility(_), None) => unreachable!("facility cluster without facility"),
        };
        let mut cluster = Cluster {
            key: key.clone(),
            facility,
            buses: Vec::new(),
        };
        for level in voltage_levels(&kvs) {
            let id = plan.buses.len();
            for &v in &level {
                level_of.insert((key.clone(), kv_key(v)), id);
            }
            plan.buses.push(Bus {
                id,
                coord,
                base_kv: level[0],
                facility_id: facility.map(|f| facilities[f].id.clone()),
                ba_code: None,
                state: source.clone(),
                v_min_pu: 0.95,
                v_max_pu: 1.05,
                is_slack: false,
            });
            cluster.buses.push(id);
        }
        plan.clusters.push(cluster);
    }

    plan.circuit_buses = circuits
        .iter()
        .map(|c| {
            if !forms_branch(c) {
                return None;
            }
            let a = level_of[&(key_of(c.endpoints.0, c.endpoint_facility_idx.0), kv_key(c.voltage_kv))];
            let b = level_of[&(key_of(c.endpoints.1, c.endpoint_facility_idx.1), kv_key(c.voltage_kv))];
            (a != b).then_some((a, b))
        })
        .collect();
    plan
}

/// Whether a pair of bus voltages warrants a transformer.
pub fn needs_transformer(hv_kv: f64, lv_kv: f64) -> bool {
    let (hv, lv) = if hv_kv >= lv_kv { (hv_kv, lv_kv) } else { (lv_kv, hv_kv) };
    hv - lv > TRANSFORMER_MIN_DIFF_KV && hv / lv > TRANSFORMER_MIN_RATIO
}

/// Transformer (hv bus, lv bus) pairs inside multi-level facilities. Converter
/// stations get none: their AC and DC sides are joined by the link model.
pub fn infer_transformers(plan: &BusPlan, facilities: &[Facility]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for c in &plan.clusters {
        let Some(f) = c.facility else { continue };
        if facilities[f].kind == FacilityKind::Converter {
            continue;
        }
        for (i, &hv) in c.buses.iter().enumerate() {
            for &lv in &c.buses[i + 1..] {
                if needs_transformer(plan.buses[hv].base_kv, plan.buses[lv].base_kv) {
                    out.push((hv, lv));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_split_on_ratio() {
        assert_eq!(voltage_levels(&[138.0, 345.0, 345.0]).len(), 2);
        assert_eq!(voltage_levels(&[230.0, 220.0]), vec![vec![230.0, 220.0]]);
        assert_eq!(voltage_levels(&[138.0, 115.0]), vec![vec![138.0, 115.0]]);
        assert_eq!(voltage_levels(&[161.0, 138.0, 115.0]), vec![vec![161.0, 138.0], vec![115.0]]);
    }

    #[test]
    fn transformer_thresholds() {
        assert!(needs_transformer(345.0, 138.0));
        assert!(!needs_transformer(230.0, 220.0));
        assert!(needs_transformer(138.0, 115.0 * 0.99));
    }

    #[test]
    fn nearby_points_cluster() {
        let a = Coord::new(-77.0, 38.0).snap();
        // about 30 m east
        let b = Coord::new(-77.0 + 0.00034, 38.0).snap();
        let c = Coord::new(-77.01, 38.0).snap();
        let groups = cluster_points(&[a, b, c]);
        assert_eq!(groups, vec![vec![0, 1], vec![2]]);
    }
}
