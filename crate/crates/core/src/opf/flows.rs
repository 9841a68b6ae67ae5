//! Polar power-flow equations with first and second derivatives.
//!
//! Every side flow of a branch has the form
//! `F = A·Vi² + B·Vk² + Vi·Vk·(α cos δ + β sin δ)` with `δ = θi − θk`,
//! where `i` is the from bus. Derivatives are taken with respect to
//! `(θi, θk, Vi, Vk)` in that order.

use nalgebra::{DMatrix, DVector};

use super::network::{PuBranch, PuNetwork};

/// Value, gradient and Hessian of one side flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideFlow {
    pub value: f64,
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
}

#[derive(Debug, Clone, Copy)]
struct Coeffs {
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
}

fn coeffs(br: &PuBranch) -> [Coeffs; 4] {
    let (g, b) = br.series_admittance();
    let bc = br.b / 2.0;
    [
        Coeffs { a: g, b: 0.0, alpha: -g, beta: -b },
        Coeffs { a: -(b + bc), b: 0.0, alpha: b, beta: -g },
        Coeffs { a: 0.0, b: g, alpha: -g, beta: b },
        Coeffs { a: 0.0, b: -(b + bc), alpha: b, beta: g },
    ]
}

fn side(c: Coeffs, th_i: f64, th_k: f64, vi: f64, vk: f64) -> SideFlow {
    let d = th_i - th_k;
    let (s, co) = d.sin_cos();
    let t = c.alpha * co + c.beta * s;
    let tp = -c.alpha * s + c.beta * co;
    let vv = vi * vk;
    let value = c.a * vi * vi + c.b * vk * vk + vv * t;
    let grad = [vv * tp, -vv * tp, 2.0 * c.a * vi + vk * t, 2.0 * c.b * vk + vi * t];
    let mut h = [[0.0; 4]; 4];
    h[0][0] = -vv * t;
    h[0][1] = vv * t;
    h[1][1] = -vv * t;
    h[0][2] = vk * tp;
    h[0][3] = vi * tp;
    h[1][2] = -vk * tp;
    h[1][3] = -vi * tp;
    h[2][2] = 2.0 * c.a;
    h[2][3] = t;
    h[3][3] = 2.0 * c.b;
    for r in 0..4 {
        for col in 0..r {
            h[r][col] = h[col][r];
        }
    }
    SideFlow { value, grad, hess: h }
}

/// `[P_from, Q_from, P_to, Q_to]` for a branch.
pub fn branch_flows(br: &PuBranch, th_f: f64, th_t: f64, vf: f64, vt: f64) -> [SideFlow; 4] {
    let c = coeffs(br);
    [
        side(c[0], th_f, th_t, vf, vt),
        side(c[1], th_f, th_t, vf, vt),
        side(c[2], th_f, th_t, vf, vt),
        side(c[3], th_f, th_t, vf, vt),
    ]
}

/// Net power leaving each bus into branches and shunts, `(P, Q)`.
pub fn bus_injections(net: &PuNetwork, th: &[f64], vm: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nb = net.buses.len();
    let mut p = vec![0.0; nb];
    let mut q = vec![0.0; nb];
    for (i, b) in net.buses.iter().enumerate() {
        p[i] = b.gs * vm[i] * vm[i];
        q[i] = -b.bs * vm[i] * vm[i];
    }
    for br in &net.branches {
        let (f, t) = (br.from, br.to);
        let fl = branch_flows(br, th[f], th[t], vm[f], vm[t]);
        p[f] += fl[0].value;
        q[f] += fl[1].value;
        p[t] += fl[2].value;
        q[t] += fl[3].value;
    }
    (p, q)
}

/// Jacobian of [`bus_injections`]: rows `[P; Q]`, columns `[θ; |V|]`.
pub fn injection_jacobian(net: &PuNetwork, th: &[f64], vm: &[f64]) -> DMatrix<f64> {
    let nb = net.buses.len();
    let mut j = DMatrix::zeros(2 * nb, 2 * nb);
    for (i, b) in net.buses.iter().enumerate() {
        j[(i, nb + i)] += 2.0 * b.gs * vm[i];
        j[(nb + i, nb + i)] -= 2.0 * b.bs * vm[i];
    }
    for br in &net.branches {
        let (f, t) = (br.from, br.to);
        let cols = [f, t, nb + f, nb + t];
        let fl = branch_flows(br, th[f], th[t], vm[f], vm[t]);
        let rows = [f, nb + f, t, nb + t];
        for (s, row) in rows.iter().enumerate() {
            for (c, col) in cols.iter().enumerate() {
                j[(*row, *col)] += fl[s].grad[c];
            }
        }
    }
    j
}

/// Injection vector `[P; Q]` as a single column, for finite differences.
pub fn injection_vector(net: &PuNetwork, th: &[f64], vm: &[f64]) -> DVector<f64> {
    let (p, q) = bus_injections(net, th, vm);
    DVector::from_iterator(p.len() + q.len(), p.into_iter().chain(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn br(r: f64, x: f64, b: f64) -> PuBranch {
        PuBranch {
            id: 0,
            from: 0,
            to: 1,
            r,
            x,
            b,
            rate_a: 1.0,
            angle_max: 1.0,
            transformer: false,
        }
    }

    #[test]
    fn lossless_flow() {
        let f = branch_flows(&br(0.0, 0.1, 0.0), 0.1, 0.0, 1.0, 1.0);
        assert!((f[0].value - 10.0 * 0.1f64.sin()).abs() < 1e-12);
        assert!((f[0].value + f[2].value).abs() < 1e-12);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let b = br(0.02, 0.08, 0.1);
        let x = [0.13, -0.05, 1.03, 0.97];
        let h = 1e-6;
        for s in 0..4 {
            let base = branch_flows(&b, x[0], x[1], x[2], x[3])[s];
            for c in 0..4 {
                let mut xp = x;
                let mut xm = x;
                xp[c] += h;
                xm[c] -= h;
                let gp = branch_flows(&b, xp[0], xp[1], xp[2], xp[3])[s].grad;
                let gm = branch_flows(&b, xm[0], xm[1], xm[2], xm[3])[s].grad;
                for r in 0..4 {
                    let fd = (gp[r] - gm[r]) / (2.0 * h);
                    assert!((fd - base.hess[r][c]).abs() < 1e-5, "side {s} ({r},{c})");
                }
            }
        }
    }
}
