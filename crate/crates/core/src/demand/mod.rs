//! Load allocation, renewable derating, dispatch and inventory injection.

pub mod ba;
pub mod dispatch;
pub mod inject;
pub mod load;
pub mod profiles;

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;
use thiserror::Error;

pub use ba::{compute_regional_fractions, detect_balancing_authorities, BaAssignment, RegionalFractions, Scope};
pub use dispatch::{merit_order_dispatch, reassign_slack, DispatchPlan};
pub use inject::{inject_eia_generators, InjectionReport};
pub use load::{allocate_loads, LoadSet};
pub use profiles::{derate_renewables, Profiles, Season};

use crate::ingest::FixtureTables;
use crate::model::NetworkModel;
use crate::parameters::ParameterTables;

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("no balancing-authority polygons in the fixtures")]
    NoBaPolygons,
    #[error("the model has no buses")]
    EmptyModel,
    #[error("no peak demand for state {0}")]
    MissingStatePeak(String),
    #[error("no peak demand for balancing authority {0}")]
    MissingBaPeak(String),
    #[error("no demand for balancing authority {ba} at hour {hour}")]
    MissingDemand { ba: String, hour: u8 },
    #[error("hour {0} is outside 0..=23")]
    BadHour(u8),
}

#[derive(Debug, Clone)]
pub struct DemandOptions {
    /// UTC hour of the snapshot.
    pub hour: u8,
    pub date: Option<NaiveDate>,
    pub power_factor: f64,
    pub loss_factor: f64,
    pub profiles: Profiles,
}

impl Default for DemandOptions {
    fn default() -> Self {
        DemandOptions {
            hour: 16,
            date: None,
            power_factor: load::LOAD_POWER_FACTOR,
            loss_factor: dispatch::LOSS_FACTOR,
            profiles: Profiles::default(),
        }
    }
}

impl DemandOptions {
    /// Month used for seasonal profiles; July when no date is given.
    pub fn month(&self) -> u32 {
        self.date.map(|d| d.month()).unwrap_or(7)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandReport {
    pub hour: u8,
    pub date: Option<NaiveDate>,
    pub season: Season,
    pub primary_ba: String,
    pub secondary_bas: Vec<String>,
    pub dropped_bas: Vec<String>,
    pub scope: Scope,
    pub bus_shares: BTreeMap<String, f64>,
    pub fractions: RegionalFractions,
    /// Published BA demand at the snapshot.
    pub ba_demand_mw: BTreeMap<String, f64>,
    /// Scaled demand per partition.
    pub model_demand_mw: BTreeMap<String, f64>,
    pub total_demand_mw: f64,
    pub loaded_buses: usize,
    pub nearest_ba_fallbacks: usize,
    pub nearest_tract_fallbacks: usize,
    pub uniform_partitions: Vec<String>,
    pub injection: InjectionReport,
    pub d_gross_mw: f64,
    pub dispatched_mw: f64,
    pub available_capacity_mw: f64,
    pub reserve_margin: f64,
    pub capacity_deficient: bool,
    pub slack_bus: Option<usize>,
    /// No committed non-renewable generator; the slack was left in place.
    pub slack_unchanged: bool,
}

/// Runs the demand stage in order: BA detection, regional fractions, load
/// allocation, derating, injection, merit dispatch, slack reassignment.
/// Demand is fixed before injection.
pub fn apply_demand(
    model: &mut NetworkModel,
    fixtures: &FixtureTables,
    options: &DemandOptions,
    tables: &ParameterTables,
) -> Result<DemandReport, DemandError> {
    if options.hour > 23 {
        return Err(DemandError::BadHour(options.hour));
    }
    let mut assignment = detect_balancing_authorities(model, fixtures)?;
    let fractions = compute_regional_fractions(&mut assignment, model, fixtures, model.multi_state)?;
    for (b, c) in model.buses.iter_mut().zip(&assignment.bus_ba) {
        b.ba_code = Some(c.clone());
    }

    let mut ba_demand = BTreeMap::new();
    let mut model_demand = BTreeMap::new();
    for (ba, f) in &fractions.fractions {
        let d = fixtures
            .demand_at(ba, options.date, options.hour)
            .ok_or_else(|| DemandError::MissingDemand {
                ba: ba.clone(),
                hour: options.hour,
            })?;
        ba_demand.insert(ba.clone(), d);
        model_demand.insert(ba.clone(), d * f);
    }
    let mut loads = allocate_loads(
        &model_demand,
        &model.buses,
        &assignment.bus_ba,
        &fixtures.census_tracts,
        options.power_factor,
    );
    loads.hour = options.hour;
    loads.date = options.date;
    model.loads = loads.loads.clone();
    let total = loads.total_mw;

    let month = options.month();
    derate_renewables(&mut model.generators, &model.buses, options.hour, month, &options.profiles);
    let injection = inject_eia_generators(model, total, fixtures, tables);
    derate_renewables(&mut model.generators, &model.buses, options.hour, month, &options.profiles);

    let plan = merit_order_dispatch(&model.generators, total, options.loss_factor);
    dispatch::apply_dispatch(&mut model.generators, &plan);
    let slack = reassign_slack(model);
    crate::parameters::refresh_bus_limits(model);

    Ok(DemandReport {
        hour: options.hour,
        date: options.date,
        season: Season::of_month(month),
        primary_ba: assignment.primary_ba.clone(),
        secondary_bas: assignment.secondary_bas.clone(),
        dropped_bas: assignment.dropped_bas.clone(),
        scope: assignment.scope,
        bus_shares: assignment.shares.clone(),
        fractions,
        ba_demand_mw: ba_demand,
        model_demand_mw: model_demand,
        total_demand_mw: total,
        loaded_buses: model.loads.len(),
        nearest_ba_fallbacks: assignment.nearest_fallbacks,
        nearest_tract_fallbacks: loads.nearest_tract_fallbacks,
        uniform_partitions: loads.uniform_partitions,
        injection,
        d_gross_mw: plan.d_gross_mw,
        dispatched_mw: plan.p_set_mw.iter().sum(),
        available_capacity_mw: plan.derated_p_max_mw.iter().sum(),
        reserve_margin: plan.reserve_margin,
        capacity_deficient: plan.capacity_deficient,
        slack_bus: model.slack_bus(),
        slack_unchanged: slack.is_none(),
    })
}
