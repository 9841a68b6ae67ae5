//! Decommitment and reactive shunt placement ahead of the solves.

use log::warn;
use serde::{Deserialize, Serialize};

use super::network::PuNetwork;
use super::solution::OpfSolution;

pub const SHUNT_MARGIN: f64 = 0.15;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecommitReport {
    pub demand_pu: f64,
    pub p_min_before_pu: f64,
    pub p_min_after_pu: f64,
    /// Generator ids whose minimum output was released, in order.
    pub released: Vec<usize>,
    /// Protected units alone exceed demand.
    pub protected_excess: bool,
}

/// Releases `p_min` on the most expensive unprotected generators while the
/// total minimum output exceeds demand. Ties on `c1` go to the smaller unit.
pub fn decommit_generators(net: &mut PuNetwork) -> DecommitReport {
    let demand = net.total_pd();
    let total = |n: &PuNetwork| n.gens.iter().map(|g| g.p_min).sum::<f64>();
    let mut report = DecommitReport {
        demand_pu: demand,
        p_min_before_pu: total(net),
        ..Default::default()
    };
    while total(net) > demand {
        let pick = net
            .gens
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.protected() && g.p_min > 0.0)
            .min_by(|(_, a), (_, b)| {
                b.c1.total_cmp(&a.c1)
                    .then(a.p_max.total_cmp(&b.p_max))
                    .then(a.id.cmp(&b.id))
            })
            .map(|(i, _)| i);
        let Some(i) = pick else {
            report.protected_excess = true;
            warn!("protected minimum generation exceeds demand; decommitment cannot restore balance");
            break;
        };
        net.gens[i].p_min = 0.0;
        report.released.push(net.gens[i].id);
    }
    report.p_min_after_pu = total(net);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuntKind {
    Capacitor,
    Reactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuntPlacement {
    pub bus: usize,
    pub kind: ShuntKind,
    /// Susceptance added (pu at 1.0 voltage); negative for reactors.
    pub bs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShuntReport {
    pub placements: Vec<ShuntPlacement>,
    pub capacitors: usize,
    pub reactors: usize,
    pub total_capacitive_pu: f64,
    pub total_reactive_pu: f64,
}

/// Per-bus reactive balance from a DC dispatch:
/// `deficit = Qd + Qloss − Qgen_max − Qcharge`, with `Qloss ≈ P²x` split
/// evenly between branch ends and `Qcharge` the line charging at 1.0 pu.
/// A capacitor covers a deficit above the margin of `Qd + Qloss`; a reactor
/// absorbs charging surplus above the margin of `Qcharge`.
pub fn inject_shunts(net: &mut PuNetwork, dc: &OpfSolution) -> ShuntReport {
    let nb = net.buses.len();
    let mut q_loss = vec![0.0; nb];
    let mut q_charge = vec![0.0; nb];
    for (br, flow) in net.branches.iter().zip(&dc.branches) {
        let l = flow.p_from * flow.p_from * br.x;
        q_loss[br.from] += l / 2.0;
        q_loss[br.to] += l / 2.0;
        q_charge[br.from] += br.b / 2.0;
        q_charge[br.to] += br.b / 2.0;
    }
    let mut q_max = vec![0.0; nb];
    let mut q_min = vec![0.0; nb];
    for g in &net.gens {
        q_max[g.bus] += g.q_max;
        q_min[g.bus] += g.q_min;
    }
    for d in &net.dclines {
        q_max[d.from] += d.q_max;
        q_max[d.to] += d.q_max;
        q_min[d.from] += d.q_min;
        q_min[d.to] += d.q_min;
    }
    let mut report = ShuntReport::default();
    for b in 0..nb {
        let need = net.buses[b].qd + q_loss[b];
        let deficit = need - q_max[b] - q_charge[b];
        let surplus = q_charge[b] - need + q_min[b];
        if deficit > 0.0 && deficit > SHUNT_MARGIN * need {
            net.buses[b].bs += deficit;
            report.capacitors += 1;
            report.total_capacitive_pu += deficit;
            report.placements.push(ShuntPlacement {
                bus: b,
                kind: ShuntKind::Capacitor,
                bs: deficit,
            });
        } else if surplus > 0.0 && surplus > SHUNT_MARGIN * q_charge[b] {
            net.buses[b].bs -= surplus;
            report.reactors += 1;
            report.total_reactive_pu += surplus;
            report.placements.push(ShuntPlacement {
                bus: b,
                kind: ShuntKind::Reactor,
                bs: -surplus,
            });
        }
    }
    report
}

/// Reactive loss estimate for one branch.
pub fn q_loss_estimate(p: f64, x: f64) -> f64 {
    p * p * x
}
