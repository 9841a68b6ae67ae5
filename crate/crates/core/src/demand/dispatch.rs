//! Merit-order dispatch and slack reassignment.

use serde::Serialize;

use crate::model::{Generator, NetworkModel};

pub const LOSS_FACTOR: f64 = 1.03;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchPlan {
    pub p_set_mw: Vec<f64>,
    pub committed: Vec<bool>,
    /// Available capacity after derating.
    pub derated_p_max_mw: Vec<f64>,
    pub d_gross_mw: f64,
    pub capacity_deficient: bool,
    /// Available capacity over load.
    pub reserve_margin: f64,
}

/// Merit order: ascending `c1`, then larger available capacity, then id.
pub fn merit_order(gens: &[Generator]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gens.len()).collect();
    order.sort_by(|&a, &b| {
        let (ga, gb) = (&gens[a], &gens[b]);
        ga.c1
            .total_cmp(&gb.c1)
            .then(gb.p_avail_mw.total_cmp(&ga.p_avail_mw))
            .then(ga.id.cmp(&gb.id))
    });
    order
}

/// Commits units cheapest-first until `loss_factor × load` is met; the
/// marginal unit is partially loaded.
pub fn merit_order_dispatch(gens: &[Generator], total_load_mw: f64, loss_factor: f64) -> DispatchPlan {
    let d_gross = total_load_mw * loss_factor;
    let avail: Vec<f64> = gens.iter().map(|g| g.p_avail_mw.max(0.0)).collect();
    let capacity: f64 = avail.iter().sum();
    let mut p = vec![0.0; gens.len()];
    let mut committed = vec![false; gens.len()];
    let mut remaining = d_gross;
    for i in merit_order(gens) {
        if remaining <= 0.0 {
            break;
        }
        if avail[i] <= 0.0 {
            continue;
        }
        let take = avail[i].min(remaining);
        p[i] = take;
        committed[i] = true;
        remaining -= take;
    }
    DispatchPlan {
        p_set_mw: p,
        committed,
        derated_p_max_mw: avail,
        d_gross_mw: d_gross,
        capacity_deficient: capacity < d_gross,
        reserve_margin: if total_load_mw > 0.0 { capacity / total_load_mw } else { f64::INFINITY },
    }
}

pub fn apply_dispatch(gens: &mut [Generator], plan: &DispatchPlan) {
    for (i, g) in gens.iter_mut().enumerate() {
        g.p_set_mw = plan.p_set_mw[i];
        g.committed = plan.committed[i];
    }
}

/// Moves the slack to the committed non-renewable generator with the largest
/// `p_max` (ties: lower id). Returns the new slack bus, or `None` when no
/// generator qualifies and the slack is left unchanged.
pub fn reassign_slack(model: &mut NetworkModel) -> Option<usize> {
    let bus = model
        .generators
        .iter()
        .filter(|g| g.committed && !g.display.is_renewable())
        .fold(None, |best: Option<(f64, usize)>, g| match best {
            Some((p, _)) if g.p_max_mw <= p => best,
            _ => Some((g.p_max_mw, g.bus)),
        })
        .map(|(_, b)| b)?;
    model.set_slack(bus);
    Some(bus)
}
