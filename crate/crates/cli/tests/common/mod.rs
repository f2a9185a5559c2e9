//! Independent numerical oracles shared by the integration tests. Nothing
//! here calls the closed-form equilibrium code.

#![allow(dead_code)]

use patchdyn::{OdeParams, State};
use rand::Rng;

pub fn random_strict<R: Rng>(rng: &mut R) -> OdeParams {
    loop {
        let m = rng.gen_range(0.0..2.0);
        let e = rng.gen_range(0.0..1.0);
        let h = rng.gen_range(0.2..2.0);
        let delta = rng.gen_range(0.01..2.0);
        let s = rng.gen_range(0.1..2.0);
        if let Ok(p) = OdeParams::strict(m, e, h, delta, s) {
            return p;
        }
    }
}

/// Right-hand side written out independently of the library.
pub fn f(p: &OdeParams, u: f64, v: f64) -> (f64, f64) {
    (
        u * (u / (p.m + u) - p.e - p.h * u) + p.delta * u * (v - u),
        p.s * v * (1.0 - v) + p.delta * v * (u - v),
    )
}

/// `(F₁/u, F₂/v)`: zero exactly at interior equilibria.
fn reduced(p: &OdeParams, u: f64, v: f64) -> (f64, f64) {
    (
        u / (p.m + u) - p.e - p.h * u + p.delta * (v - u),
        p.s * (1.0 - v) + p.delta * (u - v),
    )
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (g(mid) > 0.0) == (ga > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn sign_change_roots(g: impl Fn(f64) -> f64, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for w in grid.windows(2) {
        let (ga, gb) = (g(w[0]), g(w[1]));
        if ga == 0.0 {
            out.push(w[0]);
        } else if (ga > 0.0) != (gb > 0.0) {
            out.push(bisect(&g, w[0], w[1]));
        }
    }
    out
}

/// 2-D Newton on `(F₁/u, F₂/v)` with a finite-difference Jacobian.
pub fn newton_interior(p: &OdeParams, start: State) -> State {
    let (mut u, mut v) = (start.u, start.v);
    for _ in 0..50 {
        let (a, b) = reduced(p, u, v);
        if a.abs().max(b.abs()) < 1e-16 {
            break;
        }
        let hu = 1e-7 * u.max(1e-8);
        let hv = 1e-7 * v.max(1e-8);
        let (au, bu) = reduced(p, u + hu, v);
        let (av, bv) = reduced(p, u, v + hv);
        let (j11, j21) = ((au - a) / hu, (bu - b) / hu);
        let (j12, j22) = ((av - a) / hv, (bv - b) / hv);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 {
            break;
        }
        let du = (j22 * a - j12 * b) / det;
        let dv = (-j21 * a + j11 * b) / det;
        u -= du;
        v -= dv;
        if du.abs().max(dv.abs()) < 1e-15 * u.abs().max(1.0) {
            break;
        }
    }
    State::new(u, v)
}

/// Interior equilibria in `(0, 10]²`: scan `u`, eliminate `v` from the
/// (linear) second equation, bisect sign changes, then polish in 2-D.
pub fn oracle_interior(p: &OdeParams) -> Vec<State> {
    let v_of = |u: f64| (p.s + p.delta * u) / (p.s + p.delta);
    let phi = |u: f64| reduced(p, u, v_of(u)).0;
    let grid = log_grid(1e-10, 10.0, 6000);
    sign_change_roots(phi, &grid)
        .into_iter()
        .map(|u| newton_interior(p, State::new(u, v_of(u))))
        .filter(|x| x.u > 0.0 && x.u <= 10.0 && x.v > 0.0 && x.v <= 10.0)
        .collect()
}

/// Nonzero roots of `F₁(u, 0)/u` in `(0, 10]`.
pub fn oracle_axis(p: &OdeParams) -> Vec<f64> {
    let phi = |u: f64| u / (p.m + u) - p.e - (p.h + p.delta) * u;
    let grid = log_grid(1e-10, 10.0, 6000);
    sign_change_roots(phi, &grid)
        .into_iter()
        .map(|mut u| {
            for _ in 0..30 {
                let g = phi(u);
                let dg = p.m / (p.m + u).powi(2) - (p.h + p.delta);
                if dg == 0.0 {
                    break;
                }
                let step = g / dg;
                u -= step;
                if step.abs() < 1e-16 * u.abs().max(1.0) {
                    break;
                }
            }
            u
        })
        .collect()
}

/// Eigenvalues of a 2×2 matrix by the characteristic polynomial, written
/// independently of the library.
pub fn eigen_real_parts(j: [[f64; 2]; 2]) -> (f64, f64) {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        (0.5 * tr, 0.5 * tr)
    } else {
        let r = disc.sqrt();
        (0.5 * (tr - r), 0.5 * (tr + r))
    }
}

pub fn fd_jacobian(p: &OdeParams, x: State) -> [[f64; 2]; 2] {
    let h = 1e-6;
    let (a, b) = f(p, x.u + h, x.v);
    let (c, d) = f(p, x.u - h, x.v);
    let (e, g) = f(p, x.u, x.v + h);
    let (k, l) = f(p, x.u, x.v - h);
    [
        [(a - c) / (2.0 * h), (e - k) / (2.0 * h)],
        [(b - d) / (2.0 * h), (g - l) / (2.0 * h)],
    ]
}

/// Interior root of the linear model: `v` from the quadratic `v`-equation,
/// then a scan on the `u`-equation over `(0, 10]`.
pub fn linear_oracle(p: &OdeParams) -> Vec<State> {
    let v_of = |u: f64| {
        let b = p.s - p.delta;
        (b + (b * b + 4.0 * p.s * p.delta * u).sqrt()) / (2.0 * p.s)
    };
    let g = |u: f64| u * (u / (p.m + u) - p.e - p.h * u) + p.delta * (v_of(u) - u);
    let grid: Vec<f64> = (0..=20000).map(|i| 1e-9 + 10.0 * i as f64 / 20000.0).collect();
    sign_change_roots(g, &grid)
        .into_iter()
        .map(|u| State::new(u, v_of(u)))
        .collect()
}
