//! Inventory injection up to the reserve-margin floor.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::geo::haversine_m;
use crate::ingest::FixtureTables;
use crate::model::{GenOrigin, Generator, NetworkModel};
use crate::parameters::fuel::normalize_fuel;
use crate::parameters::{assign_generator_economics, ParameterTables};

pub const RESERVE_MARGIN: f64 = 1.30;
pub const MAX_INJECTION_DISTANCE_M: f64 = 50_000.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectedGenerator {
    pub name: String,
    pub fuel: String,
    pub capacity_mw: f64,
    pub bus: usize,
    pub distance_km: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InjectionReport {
    pub triggered: bool,
    pub capacity_before_mw: f64,
    pub capacity_after_mw: f64,
    pub target_mw: f64,
    pub injected: Vec<InjectedGenerator>,
    /// Plants skipped for lack of a bus with a free slot within reach.
    pub unplaced: usize,
    pub margin_met: bool,
}

/// Capacity counted toward the margin: available after derating.
pub fn available_capacity(model: &NetworkModel) -> f64 {
    model.generators.iter().map(|g| g.p_avail_mw).sum()
}

/// Adds unmatched inventory plants, largest first, at the nearest bus with a
/// free connection slot, while available capacity is below
/// `RESERVE_MARGIN × demand`. A bus offers one slot per branch it terminates.
pub fn inject_eia_generators(
    model: &mut NetworkModel,
    demand_mw: f64,
    fixtures: &FixtureTables,
    tables: &ParameterTables,
) -> InjectionReport {
    let target = RESERVE_MARGIN * demand_mw;
    let mut report = InjectionReport {
        capacity_before_mw: available_capacity(model),
        target_mw: target,
        ..Default::default()
    };
    let mut capacity = report.capacity_before_mw;
    if capacity >= target {
        report.capacity_after_mw = capacity;
        report.margin_met = true;
        return report;
    }
    report.triggered = true;

    let used: BTreeSet<String> = model
        .generators
        .iter()
        .filter_map(|g| g.eia_name.clone())
        .collect();
    let mut candidates: Vec<_> = fixtures
        .eia860_plants
        .iter()
        .filter(|p| !used.contains(&p.name) && p.capacity_mw > 0.0)
        .collect();
    candidates.sort_by(|a, b| b.capacity_mw.total_cmp(&a.capacity_mw).then(a.name.cmp(&b.name)));

    let degree = model.degrees();
    let mut slots_used = vec![0usize; model.buses.len()];
    for g in &model.generators {
        if g.origin == GenOrigin::Injected {
            slots_used[g.bus] += 1;
        }
    }

    for plant in candidates {
        if capacity >= target {
            break;
        }
        let best = model
            .buses
            .iter()
            .filter(|b| slots_used[b.id] < degree[b.id])
            .map(|b| (haversine_m(plant.coord, b.coord), b.id))
            .filter(|(d, _)| *d <= MAX_INJECTION_DISTANCE_M)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some((dist, bus)) = best else {
            report.unplaced += 1;
            continue;
        };
        slots_used[bus] += 1;
        let (tech, display) = normalize_fuel(&plant.fuel_raw);
        let mut g = Generator {
            id: model.generators.len(),
            bus,
            name: Some(plant.name.clone()),
            osm_id: None,
            fuel_raw: Some(plant.fuel_raw.clone()),
            tech,
            display,
            p_max_mw: plant.capacity_mw,
            p_avail_mw: plant.capacity_mw,
            p_min_mw: 0.0,
            q_min_mvar: 0.0,
            q_max_mvar: 0.0,
            c2: 0.0,
            c1: 0.0,
            c0: 0.0,
            startup_usd: 0.0,
            heat_rate: None,
            eia_name: Some(plant.name.clone()),
            eia_matched: true,
            p_set_mw: 0.0,
            committed: false,
            origin: GenOrigin::Injected,
        };
        assign_generator_economics(&mut g, Some(fixtures), tables);
        capacity += g.p_avail_mw;
        report.injected.push(InjectedGenerator {
            name: plant.name.clone(),
            fuel: format!("{display:?}").to_lowercase(),
            capacity_mw: plant.capacity_mw,
            bus,
            distance_km: dist / 1000.0,
        });
        model.generators.push(g);
    }
    report.capacity_after_mw = capacity;
    report.margin_met = capacity >= target;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Coord;
    use crate::ingest::fixtures::Eia860Plant;
    use crate::model::{Branch, BranchKind, Bus};
    use crate::parameters::default_tables;
    use crate::parameters::fuel::{DisplayFuel, TechFuel};

    fn model(cap: f64) -> NetworkModel {
        let bus = |id: usize, lon: f64| Bus {
            id,
            coord: Coord::new(lon, 38.0),
            base_kv: 138.0,
            facility_id: None,
            ba_code: None,
            state: None,
            v_min_pu: 0.95,
            v_max_pu: 1.05,
            is_slack: false,
        };
        NetworkModel {
            base_mva: 100.0,
            buses: vec![bus(0, -77.0), bus(1, -77.1)],
            branches: vec![Branch {
                id: 0,
                from_bus: 0,
                to_bus: 1,
                kind: BranchKind::AcLine,
                r_pu: 0.0,
                x_pu: 0.1,
                b_pu: 0.0,
                rate_mva: 100.0,
                angle_limit_deg: 30.0,
                length_km: Some(9.0),
                voltage_kv: 138.0,
                lv_kv: None,
                underground: false,
                circuit_key: None,
            }],
            generators: vec![Generator {
                id: 0,
                bus: 0,
                name: None,
                osm_id: None,
                fuel_raw: None,
                tech: TechFuel::Gas,
                display: DisplayFuel::Gas,
                p_max_mw: cap,
                p_avail_mw: cap,
                p_min_mw: 0.0,
                q_min_mvar: 0.0,
                q_max_mvar: 0.0,
                c2: 0.0,
                c1: 30.0,
                c0: 0.0,
                startup_usd: 0.0,
                heat_rate: None,
                eia_name: None,
                eia_matched: false,
                p_set_mw: 0.0,
                committed: true,
                origin: GenOrigin::Osm,
            }],
            ..Default::default()
        }
    }

    fn fixtures() -> FixtureTables {
        let plant = |name: &str, mw: f64, lon: f64| Eia860Plant {
            name: name.into(),
            fuel_raw: "nuclear".into(),
            capacity_mw: mw,
            coord: Coord::new(lon, 38.0),
        };
        FixtureTables {
            eia860_plants: vec![plant("Small", 10.0, -77.0), plant("Big", 50.0, -77.1), plant("Far", 500.0, -80.0)],
            gas_price_usd_per_mmbtu: 3.5,
            ..Default::default()
        }
    }

    #[test]
    fn triggered_below_margin() {
        let mut m = model(100.0);
        let r = inject_eia_generators(&mut m, 90.0, &fixtures(), default_tables());
        assert!(r.triggered);
        assert_eq!(r.injected[0].name, "Big");
        assert_eq!(r.injected[0].bus, 1);
        assert_eq!(r.unplaced, 1);
        assert!(r.margin_met);
        assert_eq!(m.generators.len(), 2);
        assert_eq!(m.generators[1].origin, GenOrigin::Injected);
    }

    #[test]
    fn boundary_not_triggered() {
        let mut m = model(130.0);
        let r = inject_eia_generators(&mut m, 100.0, &fixtures(), default_tables());
        assert!(!r.triggered);
        assert!(r.injected.is_empty());
    }

    #[test]
    fn idempotent() {
        let mut m = model(10.0);
        let f = fixtures();
        inject_eia_generators(&mut m, 100.0, &f, default_tables());
        let n = m.generators.len();
        let r = inject_eia_generators(&mut m, 100.0, &f, default_tables());
        assert!(r.injected.is_empty());
        assert_eq!(m.generators.len(), n);
    }
}
