//! DC optimal power flow.

use std::collections::BTreeMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use super::ipm::{self, IpmExit, IpmOptions, Nlp};
use super::relax::RelaxedNetwork;
use super::solution::{assemble, Formulation, OpfSolution, Point, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Sense {
    Eq,
    Le,
}

#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
}

/// Variable layout: generator outputs, bus angles, shed per bus, then
/// forward and reverse flow on each DC line.
#[derive(Debug, Clone)]
pub(crate) struct DcLayout {
    pub pg: usize,
    pub th: usize,
    pub shed: Option<usize>,
    pub dc: usize,
    pub n: usize,
}

struct DcModel {
    layout: DcLayout,
    lin: Vec<f64>,
    quad: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rows: Vec<Row>,
}

fn build(relaxed: &RelaxedNetwork) -> DcModel {
    let net = &relaxed.net;
    let (nb, ng, nd) = (net.buses.len(), net.gens.len(), net.dclines.len());
    let shedding = relaxed.min_served.is_some();
    let th = ng;
    let shed_at = th + nb;
    let dc = shed_at + if shedding { nb } else { 0 };
    let n = dc + 2 * nd;
    let layout = DcLayout {
        pg: 0,
        th,
        shed: shedding.then_some(shed_at),
        dc,
        n,
    };
    let mut lin = vec![0.0; n];
    let mut quad = vec![0.0; n];
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for (i, g) in net.gens.iter().enumerate() {
        lin[i] = g.c1;
        quad[i] = g.c2;
        lo[i] = g.p_min;
        hi[i] = g.p_max;
    }
    let slack = net.slack();
    lo[th + slack] = 0.0;
    hi[th + slack] = 0.0;
    if shedding {
        for (b, bus) in net.buses.iter().enumerate() {
            lo[shed_at + b] = 0.0;
            hi[shed_at + b] = bus.pd.max(0.0);
        }
    }
    for (k, d) in net.dclines.iter().enumerate() {
        for j in 0..2 {
            lo[dc + 2 * k + j] = 0.0;
            hi[dc + 2 * k + j] = d.p_max;
        }
    }

    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    for br in &net.branches {
        let y = 1.0 / br.x;
        let (f, t) = (br.from, br.to);
        balance[f].push((th + f, y));
        balance[f].push((th + t, -y));
        balance[t].push((th + t, y));
        balance[t].push((th + f, -y));
    }
    for (i, g) in net.gens.iter().enumerate() {
        balance[g.bus].push((i, -1.0));
    }
    if shedding {
        for (b, row) in balance.iter_mut().enumerate() {
            if net.buses[b].pd > 0.0 {
                row.push((shed_at + b, -1.0));
            }
        }
    }
    for (k, d) in net.dclines.iter().enumerate() {
        let (fp, fm) = (dc + 2 * k, dc + 2 * k + 1);
        let eff = 1.0 - d.loss1;
        balance[d.from].push((fp, 1.0));
        balance[d.from].push((fm, -eff));
        balance[d.to].push((fm, 1.0));
        balance[d.to].push((fp, -eff));
    }
    let mut rows: Vec<Row> = balance
        .into_iter()
        .enumerate()
        .map(|(b, terms)| Row {
            terms,
            sense: Sense::Eq,
            rhs: -net.buses[b].pd,
        })
        .collect();
    for br in &net.branches {
        let mut lim = br.angle_max;
        if br.has_thermal_limit() {
            lim = lim.min(br.rate_a * br.x);
        }
        let (f, t) = (th + br.from, th + br.to);
        rows.push(Row {
            terms: vec![(f, 1.0), (t, -1.0)],
            sense: Sense::Le,
            rhs: lim,
        });
        rows.push(Row {
            terms: vec![(t, 1.0), (f, -1.0)],
            sense: Sense::Le,
            rhs: lim,
        });
    }
    if shedding {
        rows.push(Row {
            terms: (0..nb)
                .filter(|b| net.buses[*b].pd > 0.0)
                .map(|b| (shed_at + b, 1.0))
                .collect(),
            sense: Sense::Le,
            rhs: relaxed.max_shed(),
        });
    }
    DcModel {
        layout,
        lin,
        quad,
        lo,
        hi,
        rows,
    }
}

fn solve_lp(m: &DcModel) -> Option<Vec<f64>> {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..m.layout.n)
        .map(|i| p.add_var(m.lin[i], (m.lo[i], m.hi[i])))
        .collect();
    for r in &m.rows {
        // parallel branches repeat indices; microlp wants them merged and sorted
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(i, c) in &r.terms {
            *merged.entry(i).or_default() += c;
        }
        let terms: Vec<_> = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(i, c)| (vars[i], c))
            .collect();
        let op = match r.sense {
            Sense::Eq => ComparisonOp::Eq,
            Sense::Le => ComparisonOp::Le,
        };
        p.add_constraint(terms, op, r.rhs);
    }
    let sol = p.solve().ok()?.into_solution().ok()?;
    Some(vars.iter().map(|v| sol.var_value(*v)).collect())
}

struct DcQp<'a> {
    m: &'a DcModel,
    eq: Vec<&'a Row>,
    iq: Vec<&'a Row>,
    scale: f64,
}

impl DcQp<'_> {
    fn dense(&self, rows: &[&Row], x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.m.layout.n;
        let mut v = DVector::zeros(rows.len());
        let mut j = DMatrix::zeros(rows.len(), n);
        for (k, r) in rows.iter().enumerate() {
            let mut s = -r.rhs;
            for &(i, c) in &r.terms {
                s += c * x[i];
                j[(k, i)] += c;
            }
            v[k] = s;
        }
        (v, j)
    }
}

impl Nlp for DcQp<'_> {
    fn n(&self) -> usize {
        self.m.layout.n
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.m.lo.clone(), self.m.hi.clone())
    }

    fn objective(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let mut f = 0.0;
        let mut g = DVector::zeros(x.len());
        for i in 0..x.len() {
            f += self.m.quad[i] * x[i] * x[i] + self.m.lin[i] * x[i];
            g[i] = 2.0 * self.m.quad[i] * x[i] + self.m.lin[i];
        }
        (f * self.scale, g * self.scale)
    }

    fn constraints(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let (g, dg) = self.dense(&self.eq, x);
        let (h, dh) = self.dense(&self.iq, x);
        (g, dg, h, dh)
    }

    fn hessian(&self, x: &DVector<f64>, sigma: f64, _lam: &DVector<f64>, _mu: &DVector<f64>) -> DMatrix<f64> {
        let d = DVector::from_iterator(x.len(), self.m.quad.iter().map(|q| 2.0 * q * sigma * self.scale));
        DMatrix::from_diagonal(&d)
    }
}

fn solve_qp(m: &DcModel) -> Option<(Vec<f64>, usize, f64)> {
    let qp = DcQp {
        m,
        eq: m.rows.iter().filter(|r| r.sense == Sense::Eq).collect(),
        iq: m.rows.iter().filter(|r| r.sense == Sense::Le).collect(),
        scale: 1e-4,
    };
    let x0 = DVector::from_iterator(
        m.layout.n,
        (0..m.layout.n).map(|i| {
            if m.lo[i].is_finite() && m.hi[i].is_finite() {
                0.5 * (m.lo[i] + m.hi[i])
            } else {
                0.0
            }
        }),
    );
    let r = ipm::solve(&qp, x0, &IpmOptions::default(), None);
    let ok = !matches!(r.exit, IpmExit::NumericalFailure) && Status::from_residual(r.residual) == Status::LocallySolved;
    ok.then(|| (r.x.iter().copied().collect(), r.iterations, r.residual))
}

/// Solves the DC-OPF at the network's relaxation level. Linear costs go to
/// the simplex; any quadratic term routes to the interior-point method.
pub fn solve_dc_opf(relaxed: &RelaxedNetwork) -> OpfSolution {
    let start = std::time::Instant::now();
    let m = build(relaxed);
    let quadratic = m.quad.iter().any(|q| *q != 0.0);
    let result = if quadratic {
        solve_qp(&m)
    } else {
        solve_lp(&m).map(|x| (x, 0, 0.0))
    };
    let mut sol = match result {
        None => OpfSolution::failed(Status::Infeasible, Formulation::Dc, relaxed),
        Some((x, iterations, residual)) => {
            let net = &relaxed.net;
            let l = &m.layout;
            let nb = net.buses.len();
            let th = &x[l.th..l.th + nb];
            let pg = &x[l.pg..l.pg + net.gens.len()];
            let shed: Vec<f64> = match l.shed {
                Some(s) => x[s..s + nb].iter().map(|v| v.max(0.0)).collect(),
                None => vec![0.0; nb],
            };
            let dc: Vec<_> = net
                .dclines
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    let (fp, fm) = (x[l.dc + 2 * k], x[l.dc + 2 * k + 1]);
                    let eff = 1.0 - d.loss1;
                    (fp - eff * fm, fm - eff * fp, 0.0, 0.0)
                })
                .collect();
            let vm = vec![1.0; nb];
            let qg = vec![0.0; net.gens.len()];
            assemble(
                relaxed,
                Formulation::Dc,
                Point {
                    th,
                    vm: &vm,
                    pg,
                    qg: &qg,
                    dc: &dc,
                    shed: &shed,
                },
                Status::LocallySolved,
                iterations,
                residual,
            )
        }
    };
    sol.solve_seconds = start.elapsed().as_secs_f64();
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opf::network::{BusType, PuBranch, PuBus, PuGen, PuNetwork};
    use crate::opf::relax::{Level, RelaxationPlan};
    use crate::parameters::fuel::DisplayFuel;

    pub fn two_bus(rate: f64) -> PuNetwork {
        let bus = |id, pd| PuBus {
            id,
            kind: if id == 0 { BusType::Slack } else { BusType::Pq },
            base_kv: 345.0,
            v_min: 0.95,
            v_max: 1.05,
            pd,
            qd: 0.0,
            gs: 0.0,
            bs: 0.0,
        };
        PuNetwork {
            s_base: 100.0,
            buses: vec![bus(0, 0.0), bus(1, 1.0)],
            branches: vec![PuBranch {
                id: 0,
                from: 0,
                to: 1,
                r: 0.0,
                x: 0.1,
                b: 0.0,
                rate_a: rate,
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
                c1: 10.0 * 100.0,
                c0: 0.0,
                fuel: DisplayFuel::Gas,
                p_set: 1.0,
            }],
            dclines: vec![],
        }
    }

    #[test]
    fn two_bus_hand_lp() {
        let p = RelaxationPlan::default();
        let s = solve_dc_opf(&p.apply(&two_bus(2.0), Level::L0, false));
        assert_eq!(s.status, Status::LocallySolved);
        assert!((s.gens[0].pg - 1.0).abs() < 1e-9);
        assert!((s.buses[0].va - s.buses[1].va - 0.1).abs() < 1e-9);
        assert!((s.objective_usd_per_hr - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn ladder_trace() {
        let p = RelaxationPlan::default();
        let n = two_bus(0.5);
        assert_eq!(solve_dc_opf(&p.apply(&n, Level::L0, false)).status, Status::Infeasible);
        assert_eq!(solve_dc_opf(&p.apply(&n, Level::L2, false)).status, Status::Infeasible);
        assert_eq!(solve_dc_opf(&p.apply(&n, Level::L5, false)).status, Status::LocallySolved);
    }

    #[test]
    fn quadratic_matches_marginal_condition() {
        let mut n = two_bus(2.0);
        let mut g2 = n.gens[0].clone();
        g2.id = 1;
        g2.bus = 1;
        n.gens[0].c2 = 1000.0;
        n.gens[0].c1 = 0.0;
        g2.c2 = 0.0;
        g2.c1 = 1000.0;
        n.gens.push(g2);
        let s = solve_dc_opf(&RelaxationPlan::default().apply(&n, Level::L0, false));
        assert_eq!(s.status, Status::LocallySolved);
        // 2·1000·p = 1000
        assert!((s.gens[0].pg - 0.5).abs() < 1e-5, "{:?}", s.gens);
        assert!((s.gens[1].pg - 0.5).abs() < 1e-5);
    }

    #[test]
    fn shedding_at_l4() {
        let mut n = two_bus(10.0);
        n.buses[1].pd = 3.0;
        let p = RelaxationPlan::default();
        assert_eq!(solve_dc_opf(&p.apply(&n, Level::L3, false)).status, Status::Infeasible);
        let s = solve_dc_opf(&p.apply(&n, Level::L4, false));
        assert_eq!(s.status, Status::LocallySolved);
        assert!((s.served_load_mw - 140.0).abs() < 1e-6);
        assert!(s.loss_pct < 0.0);
    }
}
