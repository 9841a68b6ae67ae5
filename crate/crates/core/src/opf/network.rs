//! Per-unit network consumed by the solvers.

use serde::{Deserialize, Serialize};

use crate::model::{NetworkModel, S_BASE_MVA};
use crate::parameters::fuel::DisplayFuel;

/// Thermal ratings at or above this are treated as unlimited.
pub const RATE_UNLIMITED: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusType {
    Pq,
    Pv,
    Slack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuBus {
    pub id: usize,
    pub kind: BusType,
    pub base_kv: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuBranch {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance, split evenly between the ends.
    pub b: f64,
    pub rate_a: f64,
    /// Maximum angle difference (radians).
    pub angle_max: f64,
    pub transformer: bool,
}

impl PuBranch {
    /// Series admittance `g + jb`.
    pub fn series_admittance(&self) -> (f64, f64) {
        let d = self.r * self.r + self.x * self.x;
        (self.r / d, -self.x / d)
    }

    pub fn has_thermal_limit(&self) -> bool {
        self.rate_a < RATE_UNLIMITED
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuGen {
    pub id: usize,
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Cost `c2 p² + c1 p + c0` in $/h with `p` in per-unit.
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub fuel: DisplayFuel,
    /// Dispatch set point used as the initial point.
    pub p_set: f64,
}

impl PuGen {
    /// Nuclear and renewables keep their minimum output.
    pub fn protected(&self) -> bool {
        self.fuel.is_zero_marginal()
    }

    pub fn cost(&self, p: f64) -> f64 {
        self.c2 * p * p + self.c1 * p + self.c0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuDcLine {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub p_max: f64,
    pub loss0: f64,
    pub loss1: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuNetwork {
    pub s_base: f64,
    pub buses: Vec<PuBus>,
    pub branches: Vec<PuBranch>,
    pub gens: Vec<PuGen>,
    pub dclines: Vec<PuDcLine>,
}

impl PuNetwork {
    pub fn slack(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusType::Slack)
            .unwrap_or(0)
    }

    pub fn total_pd(&self) -> f64 {
        self.buses.iter().map(|b| b.pd).sum()
    }

    pub fn total_p_max(&self) -> f64 {
        self.gens.iter().map(|g| g.p_max).sum()
    }

    /// Generator indices per bus.
    pub fn gens_at(&self) -> Vec<Vec<usize>> {
        let mut v = vec![Vec::new(); self.buses.len()];
        for (i, g) in self.gens.iter().enumerate() {
            v[g.bus].push(i);
        }
        v
    }
}

/// Impedance base in ohms for a voltage level.
pub fn z_base_ohm(kv: f64) -> f64 {
    kv * kv / S_BASE_MVA
}

/// Converts the model to per-unit: powers divided by 100, cost coefficients
/// rescaled so the objective stays in $/h, angles to radians.
pub fn to_per_unit(model: &NetworkModel) -> PuNetwork {
    let s = model.base_mva.max(1.0);
    let has_gen = model.has_generator();
    let mut buses: Vec<PuBus> = model
        .buses
        .iter()
        .map(|b| PuBus {
            id: b.id,
            kind: if b.is_slack {
                BusType::Slack
            } else if has_gen[b.id] {
                BusType::Pv
            } else {
                BusType::Pq
            },
            base_kv: b.base_kv,
            v_min: b.v_min_pu,
            v_max: b.v_max_pu,
            pd: 0.0,
            qd: 0.0,
            gs: 0.0,
            bs: 0.0,
        })
        .collect();
    for l in &model.loads {
        buses[l.bus].pd += l.p_mw / s;
        buses[l.bus].qd += l.q_mvar / s;
    }
    for sh in &model.shunts {
        buses[sh.bus].gs += sh.gs_mw / s;
        buses[sh.bus].bs += sh.bs_mvar / s;
    }
    let branches = model
        .branches
        .iter()
        .map(|br| PuBranch {
            id: br.id,
            from: br.from_bus,
            to: br.to_bus,
            r: br.r_pu,
            x: br.x_pu,
            b: br.b_pu,
            rate_a: br.rate_mva / s,
            angle_max: br.angle_limit_deg.to_radians(),
            transformer: br.kind.is_transformer(),
        })
        .collect();
    let gens = model
        .generators
        .iter()
        .map(|g| PuGen {
            id: g.id,
            bus: g.bus,
            p_min: g.p_min_mw.min(g.p_avail_mw) / s,
            p_max: g.p_avail_mw / s,
            q_min: g.q_min_mvar / s,
            q_max: g.q_max_mvar / s,
            c2: g.c2 * s * s,
            c1: g.c1 * s,
            c0: g.c0,
            fuel: g.display,
            p_set: g.p_set_mw / s,
        })
        .collect();
    let dclines = model
        .dclinks
        .iter()
        .map(|d| PuDcLine {
            id: d.id,
            from: d.from_bus,
            to: d.to_bus,
            p_max: d.p_max_mw / s,
            loss0: d.loss_l0_mw / s,
            loss1: d.loss_l1,
            q_min: d.q_min_mvar / s,
            q_max: d.q_max_mvar / s,
        })
        .collect();
    PuNetwork {
        s_base: s,
        buses,
        branches,
        gens,
        dclines,
    }
}
