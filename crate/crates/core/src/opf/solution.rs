//! Solver results and the relaxation attempt log.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::flows::branch_flows;
use super::relax::{Level, RelaxedNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    LocallySolved,
    AlmostLocallySolved,
    Infeasible,
    Timeout,
}

impl Status {
    pub fn converged(self) -> bool {
        matches!(self, Status::LocallySolved | Status::AlmostLocallySolved)
    }

    /// Classification of a final KKT residual.
    pub fn from_residual(r: f64) -> Status {
        if r <= 1e-4 {
            Status::LocallySolved
        } else if r <= 1e-2 {
            Status::AlmostLocallySolved
        } else {
            Status::Infeasible
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::LocallySolved => "locally_solved",
            Status::AlmostLocallySolved => "almost_locally_solved",
            Status::Infeasible => "infeasible",
            Status::Timeout => "timeout",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Dc,
    Ac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenResult {
    pub id: usize,
    pub pg: f64,
    pub qg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusResult {
    pub id: usize,
    pub vm: f64,
    pub va: f64,
    /// Curtailed real load (pu).
    pub shed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchResult {
    pub id: usize,
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcLineResult {
    pub id: usize,
    pub p_from: f64,
    pub p_to: f64,
    pub q_from: f64,
    pub q_to: f64,
}

/// One OPF solve. Per-element quantities are per-unit, totals in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpfSolution {
    pub status: Status,
    pub formulation: Formulation,
    pub level: Level,
    pub ac1: bool,
    pub objective_usd_per_hr: f64,
    pub gens: Vec<GenResult>,
    pub buses: Vec<BusResult>,
    pub branches: Vec<BranchResult>,
    pub dclines: Vec<DcLineResult>,
    pub demand_mw: f64,
    pub served_load_mw: f64,
    pub generation_mw: f64,
    pub total_loss_mw: f64,
    /// Generation over nominal demand, minus one. Negative under shedding.
    pub loss_pct: f64,
    pub iterations: usize,
    pub residual: f64,
    #[serde(skip)]
    pub solve_seconds: f64,
}

impl OpfSolution {
    /// An empty result carrying only a status.
    pub fn failed(status: Status, formulation: Formulation, relaxed: &RelaxedNetwork) -> Self {
        OpfSolution {
            status,
            formulation,
            level: relaxed.level,
            ac1: relaxed.ac1,
            objective_usd_per_hr: 0.0,
            gens: vec![],
            buses: vec![],
            branches: vec![],
            dclines: vec![],
            demand_mw: relaxed.net.total_pd() * relaxed.net.s_base,
            served_load_mw: 0.0,
            generation_mw: 0.0,
            total_loss_mw: 0.0,
            loss_pct: 0.0,
            iterations: 0,
            residual: 0.0,
            solve_seconds: 0.0,
        }
    }

    pub fn cost_per_mwh(&self) -> f64 {
        if self.served_load_mw > 0.0 {
            self.objective_usd_per_hr / self.served_load_mw
        } else {
            0.0
        }
    }
}

/// Primal point shared by both formulations when assembling a solution.
pub(crate) struct Point<'a> {
    pub th: &'a [f64],
    pub vm: &'a [f64],
    pub pg: &'a [f64],
    pub qg: &'a [f64],
    /// Per DC line `(p_from, p_to, q_from, q_to)`, withdrawals positive.
    pub dc: &'a [(f64, f64, f64, f64)],
    pub shed: &'a [f64],
}

pub(crate) fn assemble(
    relaxed: &RelaxedNetwork,
    formulation: Formulation,
    x: Point<'_>,
    status: Status,
    iterations: usize,
    residual: f64,
) -> OpfSolution {
    let net = &relaxed.net;
    let s = net.s_base;
    let branches: Vec<BranchResult> = net
        .branches
        .iter()
        .map(|br| {
            let (f, t) = (br.from, br.to);
            match formulation {
                Formulation::Ac => {
                    let fl = branch_flows(br, x.th[f], x.th[t], x.vm[f], x.vm[t]);
                    BranchResult {
                        id: br.id,
                        p_from: fl[0].value,
                        q_from: fl[1].value,
                        p_to: fl[2].value,
                        q_to: fl[3].value,
                    }
                }
                Formulation::Dc => {
                    let p = (x.th[f] - x.th[t]) / br.x;
                    BranchResult {
                        id: br.id,
                        p_from: p,
                        q_from: 0.0,
                        p_to: -p,
                        q_to: 0.0,
                    }
                }
            }
        })
        .collect();
    let gens: Vec<GenResult> = net
        .gens
        .iter()
        .enumerate()
        .map(|(i, g)| GenResult {
            id: g.id,
            pg: x.pg[i],
            qg: x.qg[i],
        })
        .collect();
    let buses: Vec<BusResult> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| BusResult {
            id: b.id,
            vm: x.vm[i],
            va: x.th[i],
            shed: x.shed[i],
        })
        .collect();
    let dclines: Vec<DcLineResult> = net
        .dclines
        .iter()
        .zip(x.dc)
        .map(|(d, &(pf, pt, qf, qt))| DcLineResult {
            id: d.id,
            p_from: pf,
            p_to: pt,
            q_from: qf,
            q_to: qt,
        })
        .collect();
    let pd = net.total_pd();
    let served = pd - x.shed.iter().sum::<f64>();
    let pg: f64 = x.pg.iter().sum();
    let shunt_p: f64 = net
        .buses
        .iter()
        .zip(x.vm)
        .map(|(b, v)| b.gs * v * v)
        .sum();
    let line_loss: f64 = branches.iter().map(|b| b.p_from + b.p_to).sum();
    let dc_loss: f64 = dclines.iter().map(|d| d.p_from + d.p_to).sum();
    let objective = net.gens.iter().zip(x.pg).map(|(g, p)| g.cost(*p)).sum();
    OpfSolution {
        status,
        formulation,
        level: relaxed.level,
        ac1: relaxed.ac1,
        objective_usd_per_hr: objective,
        gens,
        buses,
        branches,
        dclines,
        demand_mw: pd * s,
        served_load_mw: served * s,
        generation_mw: pg * s,
        total_loss_mw: (line_loss + dc_loss + shunt_p) * s,
        loss_pct: if pd > 0.0 { 100.0 * (pg - pd) / pd } else { 0.0 },
        iterations,
        residual,
        solve_seconds: 0.0,
    }
}

/// One entry of the attempt log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub formulation: Formulation,
    pub level: Level,
    pub ac1: bool,
    pub status: Status,
    pub objective_usd_per_hr: Option<f64>,
    pub iterations: usize,
    #[serde(skip)]
    pub seconds: f64,
}

impl Attempt {
    pub fn of(sol: &OpfSolution) -> Self {
        Attempt {
            formulation: sol.formulation,
            level: sol.level,
            ac1: sol.ac1,
            status: sol.status,
            objective_usd_per_hr: sol.status.converged().then_some(sol.objective_usd_per_hr),
            iterations: sol.iterations,
            seconds: sol.solve_seconds,
        }
    }
}
