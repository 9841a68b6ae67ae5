//! Network validation: bridging, pruning and slack selection.

use std::collections::BTreeMap;

use serde::Serialize;

use super::TopologyError;
use crate::model::{Branch, BranchKind, NetworkModel};
use crate::union_find::UnionFind;

/// Bridged voltage levels at or above this get two parallel units.
pub const REDUNDANT_BRIDGE_KV: f64 = 345.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FinalizeStats {
    pub bridges_added: usize,
    pub isolated_buses_removed: usize,
    pub genless_components_removed: usize,
    pub genless_buses_removed: usize,
    pub minor_components_removed: usize,
    pub minor_buses_removed: usize,
    pub branches_removed: usize,
    pub generators_removed: usize,
    pub dclinks_removed: usize,
    pub buses: usize,
    pub branches: usize,
    pub generators: usize,
    pub slack_bus: usize,
}

fn components(n: usize, alive: &[bool], branches: &[Branch]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    for br in branches {
        if alive[br.from_bus] && alive[br.to_bus] {
            uf.union(br.from_bus, br.to_bus);
        }
    }
    uf.groups()
        .into_iter()
        .filter(|g| alive[g[0]])
        .collect()
}

/// Adds bridging transformers between consecutive voltage levels of a
/// facility that are not otherwise connected. `levels` lists each facility's
/// buses from the highest voltage down.
pub fn bridge_voltage_levels(model: &mut NetworkModel, levels: &[Vec<usize>]) -> usize {
    let n = model.buses.len();
    let mut uf = UnionFind::new(n);
    for br in &model.branches {
        uf.union(br.from_bus, br.to_bus);
    }
    let mut added = 0;
    for lv in levels {
        for w in lv.windows(2) {
            let (hv, lo) = (w[0], w[1]);
            if uf.find(hv) == uf.find(lo) {
                continue;
            }
            let hv_kv = model.buses[hv].base_kv;
            let units = if hv_kv >= REDUNDANT_BRIDGE_KV { 2 } else { 1 };
            for _ in 0..units {
                model.branches.push(Branch {
                    id: model.branches.len(),
                    from_bus: hv,
                    to_bus: lo,
                    kind: BranchKind::Bridge,
                    r_pu: 0.0,
                    x_pu: 0.0,
                    b_pu: 0.0,
                    rate_mva: 0.0,
                    angle_limit_deg: 0.0,
                    length_km: None,
                    voltage_kv: hv_kv,
                    lv_kv: Some(model.buses[lo].base_kv),
                    underground: false,
                    circuit_key: None,
                });
                added += 1;
            }
            uf.union(hv, lo);
        }
    }
    added
}

/// Keeps only `alive` buses and renumbers everything by old id order.
fn compact(model: &mut NetworkModel, alive: &[bool], stats: &mut FinalizeStats) {
    let mut new_id = vec![usize::MAX; alive.len()];
    let mut next = 0;
    for (i, a) in alive.iter().enumerate() {
        if *a {
            new_id[i] = next;
            next += 1;
        }
    }
    let buses = std::mem::take(&mut model.buses);
    model.buses = buses
        .into_iter()
        .filter(|b| alive[b.id])
        .map(|mut b| {
            b.id = new_id[b.id];
            b
        })
        .collect();

    let before = model.branches.len();
    model.branches.retain(|br| alive[br.from_bus] && alive[br.to_bus]);
    stats.branches_removed += before - model.branches.len();
    for (i, br) in model.branches.iter_mut().enumerate() {
        br.id = i;
        br.from_bus = new_id[br.from_bus];
        br.to_bus = new_id[br.to_bus];
    }

    let before = model.generators.len();
    model.generators.retain(|g| alive[g.bus]);
    stats.generators_removed += before - model.generators.len();
    for (i, g) in model.generators.iter_mut().enumerate() {
        g.id = i;
        g.bus = new_id[g.bus];
    }

    let before = model.dclinks.len();
    model.dclinks.retain(|d| alive[d.from_bus] && alive[d.to_bus]);
    stats.dclinks_removed += before - model.dclinks.len();
    for (i, d) in model.dclinks.iter_mut().enumerate() {
        d.id = i;
        d.from_bus = new_id[d.from_bus];
        d.to_bus = new_id[d.to_bus];
    }

    model.loads.retain(|l| alive[l.bus]);
    for l in &mut model.loads {
        l.bus = new_id[l.bus];
    }
    model.shunts.retain(|s| alive[s.bus]);
    for s in &mut model.shunts {
        s.bus = new_id[s.bus];
    }
}

/// Bus of the generator with the largest `p_max` (ties: lower generator id).
pub fn largest_generator_bus(model: &NetworkModel) -> Option<usize> {
    model
        .generators
        .iter()
        .fold(None, |best: Option<(f64, usize)>, g| match best {
            Some((p, _)) if g.p_max_mw <= p => best,
            _ => Some((g.p_max_mw, g.bus)),
        })
        .map(|(_, b)| b)
}

/// Runs, in order: level bridging, isolated-bus removal, removal of
/// generator-free components, largest-component retention, slack selection.
/// Connectivity counts AC branches and transformers only.
pub fn finalize_network(
    mut model: NetworkModel,
    levels: &[Vec<usize>],
) -> Result<(NetworkModel, FinalizeStats), TopologyError> {
    let mut stats = FinalizeStats {
        bridges_added: bridge_voltage_levels(&mut model, levels),
        ..Default::default()
    };

    let n = model.buses.len();
    let mut alive = vec![true; n];
    let degree = model.degrees();
    for i in 0..n {
        if degree[i] == 0 {
            alive[i] = false;
            stats.isolated_buses_removed += 1;
        }
    }

    let has_gen = model.has_generator();
    for comp in components(n, &alive, &model.branches) {
        if !comp.iter().any(|&b| has_gen[b]) {
            stats.genless_components_removed += 1;
            stats.genless_buses_removed += comp.len();
            for b in comp {
                alive[b] = false;
            }
        }
    }

    let comps = components(n, &alive, &model.branches);
    let Some(keep) = comps
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .map(|(i, _)| i)
    else {
        return Err(if model.generators.is_empty() {
            TopologyError::NoGenerators
        } else {
            TopologyError::EmptyNetwork
        });
    };
    for (i, comp) in comps.iter().enumerate() {
        if i != keep {
            stats.minor_components_removed += 1;
            stats.minor_buses_removed += comp.len();
            for &b in comp {
                alive[b] = false;
            }
        }
    }

    compact(&mut model, &alive, &mut stats);
    let slack = largest_generator_bus(&model).ok_or(TopologyError::NoGenerators)?;
    model.set_slack(slack);
    stats.buses = model.buses.len();
    stats.branches = model.branches.len();
    stats.generators = model.generators.len();
    stats.slack_bus = slack;
    Ok((model, stats))
}

/// Connected components of the AC branch graph, for diagnostics.
pub fn component_sizes(model: &NetworkModel) -> BTreeMap<usize, usize> {
    let alive = vec![true; model.buses.len()];
    let mut sizes = BTreeMap::new();
    for c in components(model.buses.len(), &alive, &model.branches) {
        *sizes.entry(c.len()).or_insert(0) += 1;
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Coord;
    use crate::model::{Bus, GenOrigin, Generator};
    use crate::parameters::fuel::{DisplayFuel, TechFuel};

    fn bus(id: usize, kv: f64, facility: Option<&str>) -> Bus {
        Bus {
            id,
            coord: Coord::new(0.0, 0.0),
            base_kv: kv,
            facility_id: facility.map(String::from),
            ba_code: None,
            state: None,
            v_min_pu: 0.95,
            v_max_pu: 1.05,
            is_slack: false,
        }
    }

    fn line(id: usize, a: usize, b: usize) -> Branch {
        Branch {
            id,
            from_bus: a,
            to_bus: b,
            kind: BranchKind::AcLine,
            r_pu: 0.0,
            x_pu: 0.0,
            b_pu: 0.0,
            rate_mva: 0.0,
            angle_limit_deg: 0.0,
            length_km: Some(10.0),
            voltage_kv: 138.0,
            lv_kv: None,
            underground: false,
            circuit_key: None,
        }
    }

    fn gen(id: usize, bus: usize, p: f64) -> Generator {
        Generator {
            id,
            bus,
            name: None,
            osm_id: None,
            fuel_raw: None,
            tech: TechFuel::Gas,
            display: DisplayFuel::Gas,
            p_max_mw: p,
            p_avail_mw: p,
            p_min_mw: 0.0,
            q_min_mvar: 0.0,
            q_max_mvar: 0.0,
            c2: 0.0,
            c1: 0.0,
            c0: 0.0,
            startup_usd: 0.0,
            heat_rate: None,
            eia_name: None,
            eia_matched: false,
            p_set_mw: 0.0,
            committed: true,
            origin: GenOrigin::Osm,
        }
    }

    fn model(buses: usize, lines: &[(usize, usize)], gens: &[(usize, f64)]) -> NetworkModel {
        NetworkModel {
            base_mva: 100.0,
            buses: (0..buses).map(|i| bus(i, 138.0, None)).collect(),
            branches: lines.iter().enumerate().map(|(i, &(a, b))| line(i, a, b)).collect(),
            generators: gens.iter().enumerate().map(|(i, &(b, p))| gen(i, b, p)).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn genless_component_removed() {
        let m = model(5, &[(0, 1), (2, 3), (3, 4)], &[(0, 100.0)]);
        let (m, s) = finalize_network(m, &[]).unwrap();
        assert_eq!(m.buses.len(), 2);
        assert_eq!(s.genless_components_removed, 1);
        assert_eq!(s.genless_buses_removed, 3);
    }

    #[test]
    fn isolated_bus_removed() {
        let m = model(3, &[(0, 1)], &[(1, 100.0)]);
        let (m, s) = finalize_network(m, &[]).unwrap();
        assert_eq!(s.isolated_buses_removed, 1);
        assert_eq!(m.buses.len(), 2);
    }

    #[test]
    fn slack_at_largest() {
        let m = model(3, &[(0, 1), (1, 2)], &[(0, 100.0), (2, 980.0)]);
        let (m, _) = finalize_network(m, &[]).unwrap();
        assert_eq!(m.slack_bus(), Some(2));
        assert_eq!(m.buses.iter().filter(|b| b.is_slack).count(), 1);
    }

    #[test]
    fn largest_component_kept_and_renumbered() {
        let m = model(5, &[(0, 1), (2, 3), (3, 4)], &[(0, 100.0), (4, 50.0)]);
        let (m, s) = finalize_network(m, &[]).unwrap();
        assert_eq!(m.buses.len(), 3);
        assert_eq!(s.minor_components_removed, 1);
        assert_eq!(m.generators.len(), 1);
        assert_eq!(m.generators[0].bus, 2);
        assert_eq!(m.slack_bus(), Some(2));
    }

    #[test]
    fn bridges_disconnected_levels() {
        let mut m = model(4, &[(0, 1), (2, 3)], &[(0, 100.0)]);
        m.buses[0] = bus(0, 345.0, Some("s"));
        m.buses[2] = bus(2, 138.0, Some("s"));
        let (m, s) = finalize_network(m, &[vec![0, 2]]).unwrap();
        assert_eq!(s.bridges_added, 2);
        assert_eq!(m.buses.len(), 4);
        assert_eq!(m.branches.iter().filter(|b| b.kind == BranchKind::Bridge).count(), 2);
    }

    #[test]
    fn no_generators_is_fatal() {
        let m = model(2, &[(0, 1)], &[]);
        assert!(finalize_network(m, &[]).is_err());
    }
}
