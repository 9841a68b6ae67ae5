//! The bus-branch network model shared by every stage after topology.
//!
//! Powers are in MW/MVAr and impedances in per-unit on the 100 MVA system
//! base. Bus ids equal their index in `buses` once the network is finalized.

use serde::Serialize;

use crate::geo::Coord;
use crate::parameters::fuel::{DisplayFuel, TechFuel};

pub const S_BASE_MVA: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bus {
    pub id: usize,
    pub coord: Coord,
    pub base_kv: f64,
    pub facility_id: Option<String>,
    pub ba_code: Option<String>,
    /// State extract the bus's facility or endpoints came from.
    pub state: Option<String>,
    pub v_min_pu: f64,
    pub v_max_pu: f64,
    pub is_slack: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    AcLine,
    Transformer,
    /// Transformer added to join disconnected voltage levels of one facility.
    Bridge,
}

impl BranchKind {
    pub fn is_transformer(self) -> bool {
        matches!(self, BranchKind::Transformer | BranchKind::Bridge)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    pub kind: BranchKind,
    pub r_pu: f64,
    pub x_pu: f64,
    pub b_pu: f64,
    pub rate_mva: f64,
    pub angle_limit_deg: f64,
    pub length_km: Option<f64>,
    /// Line voltage, or the high side of a transformer.
    pub voltage_kv: f64,
    /// Low side of a transformer.
    pub lv_kv: Option<f64>,
    pub underground: bool,
    pub circuit_key: Option<String>,
}

impl Branch {
    /// Voltage class used for scaling factors: the low side of transformers.
    pub fn scaling_kv(&self) -> f64 {
        if self.kind.is_transformer() {
            self.lv_kv.unwrap_or(self.voltage_kv)
        } else {
            self.voltage_kv
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcLink {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    pub voltage_kv: f64,
    pub p_max_mw: f64,
    pub loss_l0_mw: f64,
    pub loss_l1: f64,
    pub q_min_mvar: f64,
    pub q_max_mvar: f64,
    pub circuit_key: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenOrigin {
    Osm,
    /// Added from the plant inventory to reach the reserve margin.
    Injected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    pub name: Option<String>,
    pub osm_id: Option<String>,
    pub fuel_raw: Option<String>,
    pub tech: TechFuel,
    pub display: DisplayFuel,
    /// Nameplate capacity.
    pub p_max_mw: f64,
    /// Capacity available at the modelled hour (after renewable derating).
    pub p_avail_mw: f64,
    pub p_min_mw: f64,
    pub q_min_mvar: f64,
    pub q_max_mvar: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub startup_usd: f64,
    pub heat_rate: Option<f64>,
    pub eia_name: Option<String>,
    pub eia_matched: bool,
    pub p_set_mw: f64,
    pub committed: bool,
    pub origin: GenOrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Load {
    pub bus: usize,
    pub p_mw: f64,
    pub q_mvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shunt {
    pub bus: usize,
    pub gs_mw: f64,
    /// Positive for capacitors, negative for reactors.
    pub bs_mvar: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NetworkModel {
    pub base_mva: f64,
    pub multi_state: bool,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub dclinks: Vec<DcLink>,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    pub shunts: Vec<Shunt>,
}

impl NetworkModel {
    pub fn slack_bus(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.is_slack)
    }

    pub fn set_slack(&mut self, bus: usize) {
        for b in &mut self.buses {
            b.is_slack = b.id == bus;
        }
    }

    pub fn total_load_mw(&self) -> f64 {
        self.loads.iter().map(|l| l.p_mw).sum()
    }

    pub fn total_p_max_mw(&self) -> f64 {
        self.generators.iter().map(|g| g.p_max_mw).sum()
    }

    /// AC branch degree of every bus.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.buses.len()];
        for br in &self.branches {
            d[br.from_bus] += 1;
            d[br.to_bus] += 1;
        }
        d
    }

    pub fn has_generator(&self) -> Vec<bool> {
        let mut g = vec![false; self.buses.len()];
        for gen in &self.generators {
            g[gen.bus] = true;
        }
        g
    }
}
