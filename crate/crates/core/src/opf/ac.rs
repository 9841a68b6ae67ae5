//! AC optimal power flow in polar form.

use std::sync::atomic::AtomicBool;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::flows::branch_flows;
use super::ipm::{self, IpmExit, IpmOptions, Nlp};
use super::relax::RelaxedNetwork;
use super::solution::{assemble, Formulation, OpfSolution, Point, Status};

/// Objective scaling applied inside the solver.
pub const COST_SCALE: f64 = 1e-4;

/// Starting point for the AC solve.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    pub th: Vec<f64>,
    pub pg: Vec<f64>,
    pub shed: Vec<f64>,
}

impl WarmStart {
    /// Angles, dispatch and curtailment from a DC solution.
    pub fn from_dc(dc: &OpfSolution) -> Option<Self> {
        if !dc.status.converged() {
            return None;
        }
        Some(WarmStart {
            th: dc.buses.iter().map(|b| b.va).collect(),
            pg: dc.gens.iter().map(|g| g.pg).collect(),
            shed: dc.buses.iter().map(|b| b.shed).collect(),
        })
    }
}

/// Variable layout `[θ, |V|, Pg, Qg, (f+, f−, qf, qt) per DC line, shed]`.
#[derive(Debug, Clone)]
struct Layout {
    nb: usize,
    ng: usize,
    nd: usize,
    th: usize,
    vm: usize,
    pg: usize,
    qg: usize,
    dc: usize,
    shed: usize,
    /// Buses carrying a curtailment variable.
    shed_buses: Vec<usize>,
    n: usize,
}

pub struct AcProblem<'a> {
    relaxed: &'a RelaxedNetwork,
    l: Layout,
    thermal: Vec<usize>,
    shed_of_bus: Vec<Option<usize>>,
}

impl<'a> AcProblem<'a> {
    pub fn new(relaxed: &'a RelaxedNetwork) -> Self {
        let net = &relaxed.net;
        let (nb, ng, nd) = (net.buses.len(), net.gens.len(), net.dclines.len());
        let shed_buses: Vec<usize> = if relaxed.min_served.is_some() {
            (0..nb).filter(|b| net.buses[*b].pd > 0.0).collect()
        } else {
            vec![]
        };
        let th = 0;
        let vm = nb;
        let pg = 2 * nb;
        let qg = pg + ng;
        let dc = qg + ng;
        let shed = dc + 4 * nd;
        let n = shed + shed_buses.len();
        let mut shed_of_bus = vec![None; nb];
        for (k, b) in shed_buses.iter().enumerate() {
            shed_of_bus[*b] = Some(k);
        }
        let thermal = net
            .branches
            .iter()
            .enumerate()
            .filter(|(_, b)| b.has_thermal_limit())
            .map(|(i, _)| i)
            .collect();
        AcProblem {
            relaxed,
            l: Layout {
                nb,
                ng,
                nd,
                th,
                vm,
                pg,
                qg,
                dc,
                shed,
                shed_buses,
                n,
            },
            thermal,
            shed_of_bus,
        }
    }

    fn q_ratio(&self, b: usize) -> f64 {
        let bus = &self.relaxed.net.buses[b];
        if bus.pd > 0.0 {
            bus.qd / bus.pd
        } else {
            0.0
        }
    }

    fn n_angle_rows(&self) -> usize {
        2 * self.relaxed.net.branches.len()
    }

    fn initial_point(&self, warm: Option<&WarmStart>) -> DVector<f64> {
        let net = &self.relaxed.net;
        let l = &self.l;
        let mut x = DVector::zeros(l.n);
        for b in 0..l.nb {
            x[l.vm + b] = 1.0;
        }
        for (i, g) in net.gens.iter().enumerate() {
            x[l.pg + i] = g.p_set;
            x[l.qg + i] = 0.5 * (g.q_min + g.q_max);
        }
        if let Some(w) = warm {
            for b in 0..l.nb.min(w.th.len()) {
                x[l.th + b] = w.th[b];
            }
            for i in 0..l.ng.min(w.pg.len()) {
                x[l.pg + i] = w.pg[i];
            }
            for (k, b) in l.shed_buses.iter().enumerate() {
                if let Some(s) = w.shed.get(*b) {
                    x[l.shed + k] = *s;
                }
            }
        }
        x
    }

    /// Real and reactive bus withdrawals of each DC line variable block.
    fn dc_terms(&self, k: usize) -> [(usize, usize, f64); 4] {
        let d = &self.relaxed.net.dclines[k];
        let eff = 1.0 - d.loss1;
        let base = self.l.dc + 4 * k;
        [
            (d.from, base, 1.0),
            (d.from, base + 1, -eff),
            (d.to, base + 1, 1.0),
            (d.to, base, -eff),
        ]
    }
}

impl Nlp for AcProblem<'_> {
    fn n(&self) -> usize {
        self.l.n
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let net = &self.relaxed.net;
        let l = &self.l;
        let mut lo = vec![f64::NEG_INFINITY; l.n];
        let mut hi = vec![f64::INFINITY; l.n];
        let slack = net.slack();
        lo[l.th + slack] = 0.0;
        hi[l.th + slack] = 0.0;
        for (b, bus) in net.buses.iter().enumerate() {
            lo[l.vm + b] = bus.v_min;
            hi[l.vm + b] = bus.v_max;
        }
        for (i, g) in net.gens.iter().enumerate() {
            lo[l.pg + i] = g.p_min;
            hi[l.pg + i] = g.p_max;
            lo[l.qg + i] = g.q_min;
            hi[l.qg + i] = g.q_max;
        }
        for (k, d) in net.dclines.iter().enumerate() {
            let base = l.dc + 4 * k;
            lo[base] = 0.0;
            hi[base] = d.p_max;
            lo[base + 1] = 0.0;
            hi[base + 1] = d.p_max;
            for j in 2..4 {
                lo[base + j] = d.q_min;
                hi[base + j] = d.q_max;
            }
        }
        for (k, b) in l.shed_buses.iter().enumerate() {
            lo[l.shed + k] = 0.0;
            hi[l.shed + k] = net.buses[*b].pd;
        }
        (lo, hi)
    }

    fn objective(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let mut f = 0.0;
        let mut g = DVector::zeros(self.l.n);
        for (i, gen) in self.relaxed.net.gens.iter().enumerate() {
            let p = x[self.l.pg + i];
            f += gen.cost(p);
            g[self.l.pg + i] = 2.0 * gen.c2 * p + gen.c1;
        }
        (f * COST_SCALE, g * COST_SCALE)
    }

    fn constraints(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let net = &self.relaxed.net;
        let l = &self.l;
        let nb = l.nb;
        let mut g = DVector::zeros(2 * nb);
        let mut dg = DMatrix::zeros(2 * nb, l.n);
        for (b, bus) in net.buses.iter().enumerate() {
            let v = x[l.vm + b];
            g[b] += bus.gs * v * v + bus.pd;
            g[nb + b] += -bus.bs * v * v + bus.qd;
            dg[(b, l.vm + b)] += 2.0 * bus.gs * v;
            dg[(nb + b, l.vm + b)] += -2.0 * bus.bs * v;
            if let Some(k) = self.shed_of_bus[b] {
                let s = x[l.shed + k];
                g[b] -= s;
                g[nb + b] -= s * self.q_ratio(b);
                dg[(b, l.shed + k)] -= 1.0;
                dg[(nb + b, l.shed + k)] -= self.q_ratio(b);
            }
        }
        for (i, gen) in net.gens.iter().enumerate() {
            g[gen.bus] -= x[l.pg + i];
            g[nb + gen.bus] -= x[l.qg + i];
            dg[(gen.bus, l.pg + i)] -= 1.0;
            dg[(nb + gen.bus, l.qg + i)] -= 1.0;
        }
        for k in 0..l.nd {
            for (bus, var, c) in self.dc_terms(k) {
                g[bus] += c * x[var];
                dg[(bus, var)] += c;
            }
            let d = &net.dclines[k];
            let base = l.dc + 4 * k;
            g[nb + d.from] -= x[base + 2];
            g[nb + d.to] -= x[base + 3];
            dg[(nb + d.from, base + 2)] -= 1.0;
            dg[(nb + d.to, base + 3)] -= 1.0;
        }
        let flows: Vec<_> = net
            .branches
            .iter()
            .map(|br| {
                let (f, t) = (br.from, br.to);
                branch_flows(br, x[l.th + f], x[l.th + t], x[l.vm + f], x[l.vm + t])
            })
            .collect();
        for (br, fl) in net.branches.iter().zip(&flows) {
            let (f, t) = (br.from, br.to);
            let cols = [l.th + f, l.th + t, l.vm + f, l.vm + t];
            let rows = [f, nb + f, t, nb + t];
            for s in 0..4 {
                g[rows[s]] += fl[s].value;
                for c in 0..4 {
                    dg[(rows[s], cols[c])] += fl[s].grad[c];
                }
            }
        }

        let n_thermal = 2 * self.thermal.len();
        let n_angle = self.n_angle_rows();
        let n_shed = usize::from(!l.shed_buses.is_empty());
        let nh = n_thermal + n_angle + n_shed;
        let mut h = DVector::zeros(nh);
        let mut dh = DMatrix::zeros(nh, l.n);
        for (k, &bi) in self.thermal.iter().enumerate() {
            let br = &net.branches[bi];
            let fl = &flows[bi];
            let cols = [l.th + br.from, l.th + br.to, l.vm + br.from, l.vm + br.to];
            let r2 = br.rate_a * br.rate_a;
            for side in 0..2 {
                let (p, q) = (&fl[2 * side], &fl[2 * side + 1]);
                let row = 2 * k + side;
                h[row] = p.value * p.value + q.value * q.value - r2;
                for c in 0..4 {
                    dh[(row, cols[c])] += 2.0 * (p.value * p.grad[c] + q.value * q.grad[c]);
                }
            }
        }
        for (k, br) in net.branches.iter().enumerate() {
            let (f, t) = (l.th + br.from, l.th + br.to);
            let d = x[f] - x[t];
            let row = n_thermal + 2 * k;
            h[row] = d - br.angle_max;
            h[row + 1] = -d - br.angle_max;
            dh[(row, f)] = 1.0;
            dh[(row, t)] = -1.0;
            dh[(row + 1, f)] = -1.0;
            dh[(row + 1, t)] = 1.0;
        }
        if n_shed == 1 {
            let row = nh - 1;
            let mut s = 0.0;
            for k in 0..l.shed_buses.len() {
                s += x[l.shed + k];
                dh[(row, l.shed + k)] = 1.0;
            }
            h[row] = s - self.relaxed.max_shed();
        }
        (g, dg, h, dh)
    }

    fn hessian(&self, x: &DVector<f64>, sigma: f64, lam: &DVector<f64>, mu: &DVector<f64>) -> DMatrix<f64> {
        let net = &self.relaxed.net;
        let l = &self.l;
        let nb = l.nb;
        let mut hs = DMatrix::zeros(l.n, l.n);
        for (i, gen) in net.gens.iter().enumerate() {
            hs[(l.pg + i, l.pg + i)] += 2.0 * gen.c2 * COST_SCALE * sigma;
        }
        for (b, bus) in net.buses.iter().enumerate() {
            hs[(l.vm + b, l.vm + b)] += lam[b] * 2.0 * bus.gs - lam[nb + b] * 2.0 * bus.bs;
        }
        let mut thermal_row = vec![None; net.branches.len()];
        for (k, &bi) in self.thermal.iter().enumerate() {
            thermal_row[bi] = Some(k);
        }
        for (bi, br) in net.branches.iter().enumerate() {
            let (f, t) = (br.from, br.to);
            let cols = [l.th + f, l.th + t, l.vm + f, l.vm + t];
            let fl = branch_flows(br, x[l.th + f], x[l.th + t], x[l.vm + f], x[l.vm + t]);
            let mult = [lam[f], lam[nb + f], lam[t], lam[nb + t]];
            let mut local = [[0.0; 4]; 4];
            for s in 0..4 {
                for r in 0..4 {
                    for c in 0..4 {
                        local[r][c] += mult[s] * fl[s].hess[r][c];
                    }
                }
            }
            if let Some(k) = thermal_row[bi] {
                for side in 0..2 {
                    let m = mu[2 * k + side];
                    if m == 0.0 {
                        continue;
                    }
                    let (p, q) = (&fl[2 * side], &fl[2 * side + 1]);
                    for r in 0..4 {
                        for c in 0..4 {
                            local[r][c] += 2.0
                                * m
                                * (p.grad[r] * p.grad[c]
                                    + p.value * p.hess[r][c]
                                    + q.grad[r] * q.grad[c]
                                    + q.value * q.hess[r][c]);
                        }
                    }
                }
            }
            for r in 0..4 {
                for c in 0..4 {
                    hs[(cols[r], cols[c])] += local[r][c];
                }
            }
        }
        hs
    }
}

/// Solves the AC-OPF from an optional warm start; flat voltages otherwise.
pub fn solve_ac_opf(
    relaxed: &RelaxedNetwork,
    warm: Option<&WarmStart>,
    opts: &IpmOptions,
    cancel: Option<&AtomicBool>,
) -> OpfSolution {
    let start = Instant::now();
    let prob = AcProblem::new(relaxed);
    let x0 = prob.initial_point(warm);
    let r = ipm::solve(&prob, x0, opts, cancel);
    let status = match r.exit {
        IpmExit::Cancelled => Status::Timeout,
        IpmExit::NumericalFailure => Status::Infeasible,
        _ => Status::from_residual(r.residual),
    };
    let l = &prob.l;
    let x = &r.x;
    let net = &relaxed.net;
    let th: Vec<f64> = (0..l.nb).map(|b| x[l.th + b]).collect();
    let vm: Vec<f64> = (0..l.nb).map(|b| x[l.vm + b]).collect();
    let pg: Vec<f64> = (0..l.ng).map(|i| x[l.pg + i]).collect();
    let qg: Vec<f64> = (0..l.ng).map(|i| x[l.qg + i]).collect();
    let dc: Vec<_> = net
        .dclines
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let base = l.dc + 4 * k;
            let (fp, fm) = (x[base], x[base + 1]);
            let eff = 1.0 - d.loss1;
            (fp - eff * fm, fm - eff * fp, x[base + 2], x[base + 3])
        })
        .collect();
    let mut shed = vec![0.0; l.nb];
    for (k, b) in l.shed_buses.iter().enumerate() {
        shed[*b] = x[l.shed + k].max(0.0);
    }
    let mut sol = assemble(
        relaxed,
        Formulation::Ac,
        Point {
            th: &th,
            vm: &vm,
            pg: &pg,
            qg: &qg,
            dc: &dc,
            shed: &shed,
        },
        status,
        r.iterations,
        r.residual,
    );
    if !status.converged() && status != Status::Timeout {
        sol.status = Status::Infeasible;
    }
    sol.solve_seconds = start.elapsed().as_secs_f64();
    sol
}

/// Default solver options for AC attempts.
pub fn ac_options() -> IpmOptions {
    IpmOptions::default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opf::network::{BusType, PuBranch, PuBus, PuGen, PuNetwork};
    use crate::opf::relax::{Level, RelaxationPlan};
    use crate::parameters::fuel::DisplayFuel;

    fn two_bus(r: f64) -> PuNetwork {
        let bus = |id, pd, qd| PuBus {
            id,
            kind: if id == 0 { BusType::Slack } else { BusType::Pq },
            base_kv: 345.0,
            v_min: 0.95,
            v_max: 1.05,
            pd,
            qd,
            gs: 0.0,
            bs: 0.0,
        };
        PuNetwork {
            s_base: 100.0,
            buses: vec![bus(0, 0.0, 0.0), bus(1, 1.0, 0.0)],
            branches: vec![PuBranch {
                id: 0,
                from: 0,
                to: 1,
                r,
                x: 0.1,
                b: 0.0,
                rate_a: 2.0,
                angle_max: 30f64.to_radians(),
                transformer: false,
            }],
            gens: vec![PuGen {
                id: 0,
                bus: 0,
                p_min: 0.0,
                p_max: 2.0,
                q_min: -1.0,
                q_max: 1.0,
                c2: 0.0,
                c1: 1000.0,
                c0: 0.0,
                fuel: DisplayFuel::Gas,
                p_set: 1.0,
            }],
            dclines: vec![],
        }
    }

    #[test]
    fn lossless_equals_dc() {
        let relaxed = RelaxationPlan::default().apply(&two_bus(0.0), Level::L0, false);
        let s = solve_ac_opf(&relaxed, None, &ac_options(), None);
        assert_eq!(s.status, Status::LocallySolved, "{s:?}");
        assert!((s.objective_usd_per_hr - 1000.0).abs() < 1e-3);
    }

    #[test]
    fn lossy_premium() {
        let relaxed = RelaxationPlan::default().apply(&two_bus(0.01), Level::L0, false);
        let s = solve_ac_opf(&relaxed, None, &ac_options(), None);
        assert_eq!(s.status, Status::LocallySolved);
        let pg = s.gens[0].pg * 100.0;
        assert!(pg > 100.0 && pg < 102.0, "{pg}");
        assert!(s.total_loss_mw > 0.0);
        assert!((s.total_loss_mw - (s.generation_mw - s.served_load_mw)).abs() < 1e-6);
    }
}
