//! Primal-dual interior-point method for smooth nonlinear programs.
//!
//! Solves `min f(x)` s.t. `g(x) = 0`, `h(x) ≤ 0`, `xmin ≤ x ≤ xmax` with a
//! log barrier on the inequalities and Newton steps on the reduced KKT system.
//! Variable bounds are folded into the constraint sets; a bound with equal
//! ends becomes an equality.

use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::{DMatrix, DVector};

/// Problem callbacks. Jacobians are row-per-constraint.
pub trait Nlp {
    fn n(&self) -> usize;
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn objective(&self, x: &DVector<f64>) -> (f64, DVector<f64>);
    /// `(g, dg, h, dh)`.
    fn constraints(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>);
    /// Hessian of the Lagrangian `f + λᵀg + μᵀh` (objective weight `sigma`).
    fn hessian(&self, x: &DVector<f64>, sigma: f64, lam: &DVector<f64>, mu: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub struct IpmOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub xi: f64,
    pub sigma: f64,
    pub z0: f64,
    /// Multiplier on the objective to keep multipliers near unit scale.
    pub cost_mult: f64,
    /// Iterations without a tenfold residual improvement before giving up.
    pub stall_iters: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            tol: 1e-8,
            max_iter: 10_000,
            xi: 0.99995,
            sigma: 0.1,
            z0: 1.0,
            cost_mult: 1.0,
            stall_iters: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmExit {
    Converged,
    IterationLimit,
    Stalled,
    NumericalFailure,
    Cancelled,
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub x: DVector<f64>,
    /// Unscaled objective.
    pub f: f64,
    pub lam: DVector<f64>,
    pub mu: DVector<f64>,
    pub iterations: usize,
    /// `max(feasibility, stationarity, complementarity)` at `x`.
    pub residual: f64,
    pub feasibility: f64,
    pub exit: IpmExit,
}

struct Bounds {
    eq_idx: Vec<usize>,
    eq_val: Vec<f64>,
    /// `(index, sign, bound)`: `sign·x − sign·bound ≤ 0`.
    iq: Vec<(usize, f64, f64)>,
}

fn fold_bounds(xmin: &[f64], xmax: &[f64]) -> Bounds {
    let mut b = Bounds {
        eq_idx: vec![],
        eq_val: vec![],
        iq: vec![],
    };
    for i in 0..xmin.len() {
        if xmin[i] == xmax[i] {
            b.eq_idx.push(i);
            b.eq_val.push(xmin[i]);
            continue;
        }
        if xmax[i].is_finite() {
            b.iq.push((i, 1.0, xmax[i]));
        }
        if xmin[i].is_finite() {
            b.iq.push((i, -1.0, xmin[i]));
        }
    }
    b
}

struct Eval {
    f: f64,
    df: DVector<f64>,
    g: DVector<f64>,
    dg: DMatrix<f64>,
    h: DVector<f64>,
    dh: DMatrix<f64>,
    ng: usize,
    nh: usize,
}

fn evaluate<P: Nlp>(p: &P, bnd: &Bounds, x: &DVector<f64>, cost_mult: f64) -> Eval {
    let n = x.len();
    let (f, df) = p.objective(x);
    let (gn, dgn, hn, dhn) = p.constraints(x);
    let (ng, nh) = (gn.len(), hn.len());
    let neq = ng + bnd.eq_idx.len();
    let niq = nh + bnd.iq.len();
    let mut g = DVector::zeros(neq);
    let mut dg = DMatrix::zeros(neq, n);
    g.rows_mut(0, ng).copy_from(&gn);
    dg.rows_mut(0, ng).copy_from(&dgn);
    for (k, (&i, &v)) in bnd.eq_idx.iter().zip(&bnd.eq_val).enumerate() {
        g[ng + k] = x[i] - v;
        dg[(ng + k, i)] = 1.0;
    }
    let mut h = DVector::zeros(niq);
    let mut dh = DMatrix::zeros(niq, n);
    h.rows_mut(0, nh).copy_from(&hn);
    dh.rows_mut(0, nh).copy_from(&dhn);
    for (k, &(i, s, v)) in bnd.iq.iter().enumerate() {
        h[nh + k] = s * (x[i] - v);
        dh[(nh + k, i)] = s;
    }
    Eval {
        f: f * cost_mult,
        df: df * cost_mult,
        g,
        dg,
        h,
        dh,
        ng,
        nh,
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Conditions {
    feas: f64,
    grad: f64,
    comp: f64,
    cost: f64,
}

fn conditions(e: &Eval, x: &DVector<f64>, lam: &DVector<f64>, z: &DVector<f64>, mu: &DVector<f64>, f0: f64) -> Conditions {
    let lx = &e.df + e.dg.tr_mul(lam) + e.dh.tr_mul(mu);
    let maxh = e.h.iter().fold(0.0f64, |m, v| m.max(*v));
    Conditions {
        feas: inf_norm(&e.g).max(maxh),
        grad: inf_norm(&lx) / (1.0 + inf_norm(lam).max(inf_norm(mu))),
        comp: z.dot(mu) / (1.0 + inf_norm(x)),
        cost: (e.f - f0).abs() / (1.0 + f0.abs()),
    }
}

impl Conditions {
    fn residual(&self) -> f64 {
        self.feas.max(self.grad).max(self.comp)
    }
}

fn solve_kkt(m: &DMatrix<f64>, dg: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let n = m.nrows();
    let neq = dg.nrows();
    let mut reg = 0.0;
    for _ in 0..4 {
        let mut a = DMatrix::zeros(n + neq, n + neq);
        a.view_mut((0, 0), (n, n)).copy_from(m);
        a.view_mut((0, n), (n, neq)).copy_from(&dg.transpose());
        a.view_mut((n, 0), (neq, n)).copy_from(dg);
        if reg > 0.0 {
            for i in 0..n {
                a[(i, i)] += reg;
            }
            for i in n..n + neq {
                a[(i, i)] -= reg;
            }
        }
        if let Some(s) = a.lu().solve(rhs) {
            if s.iter().all(|v| v.is_finite()) {
                return Some(s);
            }
        }
        reg = if reg == 0.0 { 1e-10 } else { reg * 100.0 };
    }
    None
}

fn step_length(v: &DVector<f64>, dv: &DVector<f64>, xi: f64) -> f64 {
    let mut a: f64 = 1.0;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            a = a.min(xi * v[i] / -dv[i]);
        }
    }
    a
}

/// Runs the interior-point iteration from `x0`. `cancel` is polled every
/// iteration.
pub fn solve<P: Nlp>(p: &P, x0: DVector<f64>, opts: &IpmOptions, cancel: Option<&AtomicBool>) -> IpmResult {
    let (xmin, xmax) = p.bounds();
    let bnd = fold_bounds(&xmin, &xmax);
    let mut x = x0;
    for i in 0..x.len() {
        if xmin[i].is_finite() || xmax[i].is_finite() {
            x[i] = x[i].max(xmin[i]).min(xmax[i]);
        }
    }
    let mut e = evaluate(p, &bnd, &x, opts.cost_mult);
    let neq = e.g.len();
    let niq = e.h.len();
    let mut gamma = 1.0;
    let mut lam = DVector::zeros(neq);
    let mut z = DVector::from_element(niq, opts.z0);
    let mut mu = DVector::from_element(niq, opts.z0);
    for k in 0..niq {
        if e.h[k] < -opts.z0 {
            z[k] = -e.h[k];
        }
        if gamma / z[k] > opts.z0 {
            mu[k] = gamma / z[k];
        }
    }
    let mut f0 = e.f;
    let mut c = conditions(&e, &x, &lam, &z, &mu, f0);
    let mut best = c.residual();
    let mut best_iter = 0;
    let mut exit = IpmExit::IterationLimit;
    let mut it = 0;
    let done = |c: &Conditions| c.feas < opts.tol && c.grad < opts.tol && c.comp < opts.tol && c.cost < opts.tol;

    if done(&c) {
        exit = IpmExit::Converged;
    } else {
        while it < opts.max_iter {
            if cancel.is_some_and(|f| f.load(Ordering::Relaxed)) {
                exit = IpmExit::Cancelled;
                break;
            }
            it += 1;
            let lam_nl = lam.rows(0, e.ng).into_owned();
            let mu_nl = mu.rows(0, e.nh).into_owned();
            let lxx = p.hessian(&x, opts.cost_mult, &lam_nl, &mu_nl);
            let zinv = z.map(|v| 1.0 / v);
            // dhᵀ diag(μ/z) dh
            let mut dh_scaled = e.dh.clone();
            for k in 0..niq {
                let s = mu[k] * zinv[k];
                dh_scaled.row_mut(k).scale_mut(s);
            }
            let m = &lxx + e.dh.tr_mul(&dh_scaled);
            let lx = &e.df + e.dg.tr_mul(&lam) + e.dh.tr_mul(&mu);
            let mut w = DVector::zeros(niq);
            for k in 0..niq {
                w[k] = zinv[k] * (mu[k] * e.h[k] + gamma);
            }
            let nvec = lx + e.dh.tr_mul(&w);
            let n = x.len();
            let mut rhs = DVector::zeros(n + neq);
            rhs.rows_mut(0, n).copy_from(&(-nvec));
            rhs.rows_mut(n, neq).copy_from(&(-&e.g));
            let Some(sol) = solve_kkt(&m, &e.dg, &rhs) else {
                exit = IpmExit::NumericalFailure;
                break;
            };
            let dx = sol.rows(0, n).into_owned();
            let dlam = sol.rows(n, neq).into_owned();
            let dz = -&e.h - &z - &e.dh * &dx;
            let mut dmu = DVector::zeros(niq);
            for k in 0..niq {
                dmu[k] = -mu[k] + zinv[k] * (gamma - mu[k] * dz[k]);
            }
            let ap = step_length(&z, &dz, opts.xi);
            let ad = step_length(&mu, &dmu, opts.xi);
            x += ap * dx;
            z += ap * dz;
            lam += ad * dlam;
            mu += ad * dmu;
            if niq > 0 {
                gamma = opts.sigma * z.dot(&mu) / niq as f64;
            }
            e = evaluate(p, &bnd, &x, opts.cost_mult);
            c = conditions(&e, &x, &lam, &z, &mu, f0);
            f0 = e.f;
            if !e.f.is_finite() || x.iter().any(|v| !v.is_finite()) || inf_norm(&x) > 1e10 {
                exit = IpmExit::NumericalFailure;
                break;
            }
            if done(&c) {
                exit = IpmExit::Converged;
                break;
            }
            let r = c.residual();
            if r < 0.1 * best {
                best = r;
                best_iter = it;
            } else if it - best_iter > opts.stall_iters {
                exit = IpmExit::Stalled;
                break;
            }
        }
    }
    IpmResult {
        f: e.f / opts.cost_mult,
        x,
        lam,
        mu,
        iterations: it,
        residual: c.residual(),
        feasibility: c.feas,
        exit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min (x0−1)² + (x1−2)²  s.t. x0 + x1 = 1, x0 ≤ 0.2, x ≥ −5
    struct Qp;

    impl Nlp for Qp {
        fn n(&self) -> usize {
            2
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![-5.0, -5.0], vec![f64::INFINITY, f64::INFINITY])
        }
        fn objective(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
            let f = (x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2);
            (f, DVector::from_vec(vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] - 2.0)]))
        }
        fn constraints(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
            (
                DVector::from_vec(vec![x[0] + x[1] - 1.0]),
                DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                DVector::from_vec(vec![x[0] - 0.2]),
                DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            )
        }
        fn hessian(&self, _x: &DVector<f64>, s: f64, _l: &DVector<f64>, _m: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_diagonal_element(2, 2, 2.0 * s)
        }
    }

    #[test]
    fn small_qp() {
        // unconstrained by the bound, optimum is (0, 1)
        let r = solve(&Qp, DVector::from_vec(vec![0.0, 0.0]), &IpmOptions::default(), None);
        assert_eq!(r.exit, IpmExit::Converged);
        assert!((r.x[0] - 0.0).abs() < 1e-6, "{}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-6);
        assert!((r.f - 2.0).abs() < 1e-6);
    }

    #[test]
    fn cancelled() {
        let flag = AtomicBool::new(true);
        let r = solve(&Qp, DVector::from_vec(vec![0.0, 0.0]), &IpmOptions::default(), Some(&flag));
        assert_eq!(r.exit, IpmExit::Cancelled);
    }
}
