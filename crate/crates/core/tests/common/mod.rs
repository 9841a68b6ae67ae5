//! Network builders and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use gridforge::opf::{
    BusType, OpfSolution, PuBranch, PuBus, PuGen, PuNetwork, RelaxedNetwork,
};
use gridforge::parameters::fuel::DisplayFuel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod synth;

pub const UNLIMITED: f64 = gridforge::opf::network::RATE_UNLIMITED;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bus(id: usize, kind: BusType, pd: f64, qd: f64) -> PuBus {
    PuBus {
        id,
        kind,
        base_kv: 345.0,
        v_min: 0.95,
        v_max: 1.05,
        pd,
        qd,
        gs: 0.0,
        bs: 0.0,
    }
}

pub fn branch(id: usize, from: usize, to: usize, r: f64, x: f64, b: f64, rate: f64) -> PuBranch {
    PuBranch {
        id,
        from,
        to,
        r,
        x,
        b,
        rate_a: rate,
        angle_max: 30f64.to_radians(),
        transformer: false,
    }
}

/// `c1` in $/MWh; stored per-unit.
pub fn gen(id: usize, bus: usize, p_max: f64, c1_mwh: f64) -> PuGen {
    PuGen {
        id,
        bus,
        p_min: 0.0,
        p_max,
        q_min: -0.6 * p_max,
        q_max: 0.6 * p_max,
        c2: 0.0,
        c1: c1_mwh * 100.0,
        c0: 0.0,
        fuel: DisplayFuel::Gas,
        p_set: 0.5 * p_max,
    }
}

pub fn network(buses: Vec<PuBus>, branches: Vec<PuBranch>, gens: Vec<PuGen>) -> PuNetwork {
    PuNetwork {
        s_base: 100.0,
        buses,
        branches,
        gens,
        dclines: Vec::new(),
    }
}

/// Random spanning tree plus `extra` chords; no self loops.
fn edges(rng: &mut ChaCha8Rng, nb: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = (1..nb).map(|i| (rng.gen_range(0..i), i)).collect();
    for _ in 0..extra {
        let a = rng.gen_range(0..nb);
        let b = rng.gen_range(0..nb);
        if a != b {
            e.push((a.min(b), a.max(b)));
        }
    }
    e
}

/// Small lossless network for LP comparisons; some lines bind.
pub fn random_dc_network(seed: u64) -> PuNetwork {
    let mut r = rng(seed);
    let nb = r.gen_range(3..=5);
    let buses: Vec<PuBus> = (0..nb)
        .map(|i| {
            let kind = if i == 0 { BusType::Slack } else { BusType::Pq };
            bus(i, kind, r.gen_range(0.2..1.0), 0.0)
        })
        .collect();
    let load: f64 = buses.iter().map(|b| b.pd).sum();
    let extra = r.gen_range(0..=2);
    let branches: Vec<PuBranch> = edges(&mut r, nb, extra)
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let x = r.gen_range(0.05..0.3);
            let rate = if r.gen_bool(0.3) { UNLIMITED } else { r.gen_range(0.4..2.5) };
            branch(k, a, b, 0.0, x, 0.0, rate)
        })
        .collect();
    let ng = r.gen_range(1..=3);
    let mut gens: Vec<PuGen> = (0..ng)
        .map(|k| {
            let at = if k == 0 { 0 } else { r.gen_range(0..nb) };
            let mut g = gen(k, at, r.gen_range(0.5..2.0) * load, r.gen_range(10.0..80.0));
            if r.gen_bool(0.3) {
                g.p_min = 0.1 * g.p_max;
            }
            g
        })
        .collect();
    gens.sort_by_key(|g| g.id);
    network(buses, branches, gens)
}

/// Lossy meshed network with enough generation and reactive support to be
/// feasible at nominal limits.
pub fn random_ac_network(seed: u64, nb: usize) -> PuNetwork {
    let mut r = rng(seed);
    let mut buses: Vec<PuBus> = (0..nb)
        .map(|i| {
            let kind = if i == 0 { BusType::Slack } else { BusType::Pq };
            let pd = if i > 0 && r.gen_bool(0.7) { r.gen_range(0.1..0.5) } else { 0.0 };
            let mut b = bus(i, kind, pd, pd * 0.3);
            b.v_min = 0.94;
            b.v_max = 1.06;
            b
        })
        .collect();
    let load: f64 = buses.iter().map(|b| b.pd).sum();
    let extra = nb / 3 + 1;
    let branches: Vec<PuBranch> = edges(&mut r, nb, extra)
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let x = r.gen_range(0.02..0.08);
            let ratio = r.gen_range(0.05..0.3);
            let mut br = branch(k, a, b, ratio * x, x, r.gen_range(0.0..0.04), UNLIMITED);
            br.angle_max = 60f64.to_radians();
            br
        })
        .collect();
    let mut gen_buses = vec![0];
    for i in 1..nb {
        if r.gen_bool(0.3) {
            gen_buses.push(i);
        }
    }
    let share = 2.0 * load.max(0.5) / gen_buses.len() as f64;
    let gens: Vec<PuGen> = gen_buses
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let mut g = gen(k, b, share + 0.5, r.gen_range(15.0..60.0));
            g.c2 = r.gen_range(0.0..5.0);
            g.q_min = -(share + 0.5);
            g.q_max = share + 0.5;
            g
        })
        .collect();
    for &b in &gen_buses {
        buses[b].kind = if b == 0 { BusType::Slack } else { BusType::Pv };
        buses[b].v_max = 1.1;
    }
    network(buses, branches, gens)
}

/// 30-bus meshed network with r/x = 0.1.
pub fn lossy_case30() -> PuNetwork {
    let mut r = rng(30);
    let nb = 30;
    let mut buses: Vec<PuBus> = (0..nb)
        .map(|i| {
            let pd = if i % 5 == 0 { 0.0 } else { r.gen_range(0.2..0.6) };
            bus(i, if i == 0 { BusType::Slack } else { BusType::Pq }, pd, 0.25 * pd)
        })
        .collect();
    let mut e: Vec<(usize, usize)> = (0..nb).map(|i| (i, (i + 1) % nb)).collect();
    e.extend((0..nb).step_by(3).map(|i| (i, (i + 7) % nb)));
    let branches: Vec<PuBranch> = e
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let x = r.gen_range(0.03..0.12);
            let mut br = branch(k, a, b, 0.1 * x, x, 0.02, UNLIMITED);
            br.angle_max = 60f64.to_radians();
            br
        })
        .collect();
    let costs = [18.0, 22.0, 25.0, 30.0, 35.0, 40.0];
    let gens: Vec<PuGen> = (0..nb)
        .step_by(5)
        .zip(costs)
        .enumerate()
        .map(|(k, (b, c))| {
            let mut g = gen(k, b, 4.0, c);
            g.c2 = 50.0;
            g.q_min = -3.0;
            g.q_max = 3.0;
            g
        })
        .collect();
    for g in &gens {
        buses[g.bus].v_max = 1.1;
        if g.bus != 0 {
            buses[g.bus].kind = BusType::Pv;
        }
    }
    network(buses, branches, gens)
}

fn two_bus(load: f64, p_max: f64, rate: f64) -> PuNetwork {
    network(
        vec![bus(0, BusType::Slack, 0.0, 0.0), bus(1, BusType::Pq, load, 0.2 * load)],
        vec![branch(0, 0, 1, 0.01, 0.1, 0.02, rate)],
        vec![{
            let mut g = gen(0, 0, p_max, 20.0);
            g.q_min = -2.0;
            g.q_max = 2.0;
            g
        }],
    )
}

/// Converges without relaxation.
pub fn ladder_l0() -> PuNetwork {
    two_bus(1.0, 2.0, 2.0)
}

/// Needs 1.0 pu across a 0.9 pu line: solvable once ratings are raised.
pub fn ladder_l2() -> PuNetwork {
    two_bus(1.0, 2.0, 0.9)
}

/// Load above capacity: solvable only with load curtailment.
pub fn ladder_l4() -> PuNetwork {
    two_bus(2.0, 1.5, 3.0)
}

/// Lossless LP oracle: eliminates angles through PTDFs and enumerates the
/// vertices of the generator polytope.
pub fn ptdf_vertex_lp(relaxed: &RelaxedNetwork) -> Option<(f64, Vec<f64>)> {
    let net = &relaxed.net;
    let (nb, ng) = (net.buses.len(), net.gens.len());
    let slack = net.slack();
    let mut bmat = DMatrix::<f64>::zeros(nb, nb);
    for br in &net.branches {
        let y = 1.0 / br.x;
        bmat[(br.from, br.from)] += y;
        bmat[(br.to, br.to)] += y;
        bmat[(br.from, br.to)] -= y;
        bmat[(br.to, br.from)] -= y;
    }
    let keep: Vec<usize> = (0..nb).filter(|&i| i != slack).collect();
    let red = DMatrix::from_fn(keep.len(), keep.len(), |i, j| bmat[(keep[i], keep[j])]);
    let inv = red.try_inverse()?;
    // theta per unit injection at bus b
    let theta_of = |b: usize| -> DVector<f64> {
        let mut t = DVector::zeros(nb);
        if b == slack {
            return t;
        }
        let k = keep.iter().position(|&i| i == b).unwrap();
        for (r, &i) in keep.iter().enumerate() {
            t[i] = inv[(r, k)];
        }
        t
    };
    let sens: Vec<DVector<f64>> = (0..nb).map(theta_of).collect();
    let flow_sens = |br: &PuBranch, b: usize| (sens[b][br.from] - sens[b][br.to]) / br.x;

    // rows a·pg <= c
    let mut a_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (i, g) in net.gens.iter().enumerate() {
        let mut e = vec![0.0; ng];
        e[i] = 1.0;
        a_rows.push((e.clone(), g.p_max));
        a_rows.push((e.iter().map(|v| -v).collect(), -g.p_min));
    }
    for br in &net.branches {
        let mut lim = br.angle_max / br.x;
        if br.rate_a < UNLIMITED {
            lim = lim.min(br.rate_a);
        }
        let coeff: Vec<f64> = net.gens.iter().map(|g| flow_sens(br, g.bus)).collect();
        let base: f64 = (0..nb).map(|b| flow_sens(br, b) * net.buses[b].pd).sum();
        a_rows.push((coeff.clone(), lim + base));
        a_rows.push((coeff.iter().map(|v| -v).collect(), lim - base));
    }
    let demand = net.total_pd();
    let cost: Vec<f64> = net.gens.iter().map(|g| g.c1).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let m = a_rows.len();
    let mut pick = vec![0usize; ng.saturating_sub(1)];
    let mut visit = |set: &[usize]| {
        let mut a = DMatrix::zeros(ng, ng);
        let mut rhs = DVector::zeros(ng);
        for j in 0..ng {
            a[(0, j)] = 1.0;
        }
        rhs[0] = demand;
        for (r, &k) in set.iter().enumerate() {
            for j in 0..ng {
                a[(r + 1, j)] = a_rows[k].0[j];
            }
            rhs[r + 1] = a_rows[k].1;
        }
        let Some(x) = a.lu().solve(&rhs) else { return };
        if x.iter().any(|v| !v.is_finite()) {
            return;
        }
        let feasible = a_rows.iter().all(|(row, c)| {
            let s: f64 = row.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
            s <= c + 1e-9 * (1.0 + c.abs())
        }) && (x.sum() - demand).abs() <= 1e-9 * (1.0 + demand);
        if !feasible {
            return;
        }
        let f: f64 = cost.iter().zip(x.iter()).map(|(c, p)| c * p).sum();
        if best.as_ref().map_or(true, |(bf, _)| f < *bf) {
            best = Some((f, x.iter().copied().collect()));
        }
    };
    fn combos(m: usize, k: usize, start: usize, depth: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if depth == k {
            f(pick);
            return;
        }
        for i in start..m {
            pick[depth] = i;
            combos(m, k, i + 1, depth + 1, pick, f);
        }
    }
    combos(m, ng - 1, 0, 0, &mut pick, &mut visit);
    best.map(|(f, x)| (f + net.gens.iter().map(|g| g.c0).sum::<f64>(), x))
}

/// Largest bus power mismatch of an AC solution, recomputed from a complex
/// admittance matrix.
pub fn ybus_mismatch(net: &PuNetwork, sol: &OpfSolution) -> f64 {
    let nb = net.buses.len();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); nb]; nb];
    for br in &net.branches {
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let half = Complex64::new(0.0, br.b / 2.0);
        y[br.from][br.from] += ys + half;
        y[br.to][br.to] += ys + half;
        y[br.from][br.to] -= ys;
        y[br.to][br.from] -= ys;
    }
    for (i, b) in net.buses.iter().enumerate() {
        y[i][i] += Complex64::new(b.gs, b.bs);
    }
    let v: Vec<Complex64> = sol.buses.iter().map(|b| Complex64::from_polar(b.vm, b.va)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..nb {
        let current: Complex64 = (0..nb).map(|k| y[i][k] * v[k]).sum();
        let s = v[i] * current.conj();
        let (mut pg, mut qg) = (0.0, 0.0);
        for (g, r) in net.gens.iter().zip(&sol.gens) {
            if g.bus == i {
                pg += r.pg;
                qg += r.qg;
            }
        }
        let served = net.buses[i].pd - sol.buses[i].shed;
        worst = worst.max((pg - served - s.re).abs());
        worst = worst.max((qg - net.buses[i].qd - s.im).abs());
    }
    worst
}

pub fn random_point(seed: u64, nb: usize) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let th = (0..nb).map(|_| r.gen_range(-PI / 6.0..PI / 6.0)).collect();
    let vm = (0..nb).map(|_| r.gen_range(0.9..1.1)).collect();
    (th, vm)
}

/// Central-difference Jacobian of `f` at `x`.
pub fn central_jacobian(f: impl Fn(&[f64]) -> DVector<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for c in 0..x.len() {
        xp[c] = x[c] + h;
        let fp = f(&xp);
        xp[c] = x[c] - h;
        let fm = f(&xp);
        xp[c] = x[c];
        for r in 0..m {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    j
}
