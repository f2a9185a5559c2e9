//! Parameter and state types, right-hand sides and Jacobians of the two
//! ODE models, the nullcline maps of the linear model, and the Dulac
//! divergence used to rule out closed orbits.
//!
//! Nonlinear dispersal (the default model):
//!
//! ```text
//! u' = u (u/(m+u) - e - h u) + δ u (v - u)
//! v' = s v (1 - v)           + δ v (u - v)
//! ```
//!
//! Linear dispersal replaces `δ u (v-u)` by `δ (v-u)` and `δ v (u-v)` by
//! `δ (u-v)`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How strictly [`OdeParams`] are checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validation {
    /// Nonlinear-dispersal model: additionally requires `0 < e < 1`.
    Strict,
    /// Linear-dispersal model: `e` only has to be positive.
    Relaxed,
}

/// Which of the two ODE systems is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Nonlinear,
    Linear,
}

impl Model {
    pub fn validation(self) -> Validation {
        match self {
            Model::Nonlinear => Validation::Strict,
            Model::Linear => Validation::Relaxed,
        }
    }

    pub fn rhs(self, p: &OdeParams, x: State) -> State {
        match self {
            Model::Nonlinear => rhs_nonlinear(p, x),
            Model::Linear => rhs_linear(p, x),
        }
    }

    pub fn jacobian(self, p: &OdeParams, x: State) -> Matrix2 {
        match self {
            Model::Nonlinear => jacobian_nonlinear(p, x),
            Model::Linear => jacobian_linear(p, x),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Nonlinear => "nonlinear",
            Model::Linear => "linear",
        })
    }
}

/// Dimensional parameters of the original two-patch system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginalParams {
    /// Maximum birth rate in patch 1.
    pub r: f64,
    /// Allee constant (density at which births reach half their maximum).
    #[serde(rename = "A")]
    pub allee: f64,
    /// Natural mortality in patch 1.
    pub d: f64,
    /// Competition death rate in patch 1.
    pub b: f64,
    /// Intrinsic growth rate in patch 2.
    pub a: f64,
    /// Competition rate in patch 2.
    pub c: f64,
    /// Dispersal coefficient.
    #[serde(rename = "D")]
    pub dispersal: f64,
}

impl OriginalParams {
    fn check_positive(&self) -> Result<()> {
        let fields = [
            ("r", self.r),
            ("A", self.allee),
            ("d", self.d),
            ("b", self.b),
            ("a", self.a),
            ("c", self.c),
            ("D", self.dispersal),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain(format!(
                    "original parameter `{name}` must be finite and positive (got {value})"
                )));
            }
        }
        Ok(())
    }
}

/// Dimensionless parameters `(m, e, h, δ, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeParams {
    /// Allee constant.
    pub m: f64,
    /// Scaled mortality.
    pub e: f64,
    /// Scaled competition in patch 1.
    pub h: f64,
    /// Scaled dispersal.
    pub delta: f64,
    /// Scaled growth rate of patch 2.
    pub s: f64,
}

impl OdeParams {
    pub fn new(m: f64, e: f64, h: f64, delta: f64, s: f64, mode: Validation) -> Result<Self> {
        let p = Self { m, e, h, delta, s };
        p.validate(mode)?;
        Ok(p)
    }

    pub fn strict(m: f64, e: f64, h: f64, delta: f64, s: f64) -> Result<Self> {
        Self::new(m, e, h, delta, s, Validation::Strict)
    }

    pub fn relaxed(m: f64, e: f64, h: f64, delta: f64, s: f64) -> Result<Self> {
        Self::new(m, e, h, delta, s, Validation::Relaxed)
    }

    pub fn validate(&self, mode: Validation) -> Result<()> {
        let positive = [
            ("m", self.m),
            ("e", self.e),
            ("h", self.h),
            ("delta", self.delta),
            ("s", self.s),
        ];
        for (param, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation {
                    param,
                    bound: "0 < value < inf",
                    value,
                });
            }
        }
        if mode == Validation::Strict && self.e >= 1.0 {
            return Err(Error::Validation {
                param: "e",
                bound: "0 < e < 1",
                value: self.e,
            });
        }
        Ok(())
    }

    /// `B = sδ/(s+δ)`, the dispersal-growth composite that decides whether
    /// inflow from patch 2 can rescue patch 1. Evaluated as `δ/(1 + δ/s)`,
    /// which avoids the rounded product `sδ` (0.9·0.1 is not 0.09 in binary).
    pub fn b(&self) -> f64 {
        self.delta / (1.0 + self.delta / self.s)
    }

    /// Copy with a different Allee constant.
    pub fn with_m(&self, m: f64) -> Self {
        Self { m, ..*self }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

/// Maps the dimensional system onto `(m, e, h, δ, s)` via
/// `ū = cu/a`, `v̄ = cv/a`, `τ = rt`.
pub fn nondimensionalize(p: &OriginalParams, mode: Validation) -> Result<OdeParams> {
    p.check_positive()?;
    OdeParams::new(
        p.allee * p.c / p.a,
        p.d / p.r,
        p.a * p.b / (p.c * p.r),
        p.dispersal * p.a / (p.c * p.r),
        p.a / p.r,
        mode,
    )
}

/// Densities `(u, v)` of patch 1 and patch 2. Also used for time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub u: f64,
    pub v: f64,
}

impl State {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn norm(self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn max_norm(self) -> f64 {
        self.u.abs().max(self.v.abs())
    }

    pub fn dist(self, other: State) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: State) -> f64 {
        self.u * other.u + self.v * other.v
    }
}

impl Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        State::new(self.u + rhs.u, self.v + rhs.v)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        State::new(self.u - rhs.u, self.v - rhs.v)
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, k: f64) -> State {
        State::new(self.u * k, self.v * k)
    }
}

/// A real 2×2 matrix `[[j11, j12], [j21, j22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub j11: f64,
    pub j12: f64,
    pub j21: f64,
    pub j22: f64,
}

impl Matrix2 {
    pub const fn new(j11: f64, j12: f64, j21: f64, j22: f64) -> Self {
        Self { j11, j12, j21, j22 }
    }

    pub fn trace(&self) -> f64 {
        self.j11 + self.j22
    }

    pub fn det(&self) -> f64 {
        self.j11 * self.j22 - self.j12 * self.j21
    }

    /// `tr² - 4 det`; negative for a complex-conjugate pair.
    pub fn discriminant(&self) -> f64 {
        let half_diff = 0.5 * (self.j11 - self.j22);
        4.0 * (half_diff * half_diff + self.j12 * self.j21)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.j11, self.j21, self.j12, self.j22)
    }

    pub fn apply(&self, x: State) -> State {
        State::new(
            self.j11 * x.u + self.j12 * x.v,
            self.j21 * x.u + self.j22 * x.v,
        )
    }

    /// Eigenvalues from the trace/determinant closed form, ordered by
    /// ascending real part (then imaginary part).
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = 0.5 * self.trace();
        let disc = self.discriminant();
        if disc >= 0.0 {
            // Larger-magnitude root first, the other from the product.
            let root = 0.5 * disc.sqrt();
            let big = if half_tr >= 0.0 {
                half_tr + root
            } else {
                half_tr - root
            };
            let small = if big != 0.0 { self.det() / big } else { 0.0 };
            let (lo, hi) = if big <= small { (big, small) } else { (small, big) };
            [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
        } else {
            let im = 0.5 * (-disc).sqrt();
            [Complex64::new(half_tr, -im), Complex64::new(half_tr, im)]
        }
    }
}

#[inline]
fn allee_fraction(m: f64, u: f64) -> f64 {
    u / (m + u)
}

/// Right-hand side `(F₁, F₂)` of the nonlinear-dispersal model.
pub fn rhs_nonlinear(p: &OdeParams, x: State) -> State {
    let State { u, v } = x;
    State::new(
        u * (allee_fraction(p.m, u) - p.e - p.h * u) + p.delta * u * (v - u),
        p.s * v * (1.0 - v) + p.delta * v * (u - v),
    )
}

/// Analytic Jacobian of [`rhs_nonlinear`].
pub fn jacobian_nonlinear(p: &OdeParams, x: State) -> Matrix2 {
    let State { u, v } = x;
    let mu = p.m + u;
    Matrix2::new(
        u * (2.0 * p.m + u) / (mu * mu) - p.e - 2.0 * (p.h + p.delta) * u + p.delta * v,
        p.delta * u,
        p.delta * v,
        p.s - 2.0 * (p.s + p.delta) * v + p.delta * u,
    )
}

/// Right-hand side of the linear-dispersal model.
pub fn rhs_linear(p: &OdeParams, x: State) -> State {
    let State { u, v } = x;
    State::new(
        u * (allee_fraction(p.m, u) - p.e - p.h * u) + p.delta * (v - u),
        p.s * v * (1.0 - v) + p.delta * (u - v),
    )
}

/// Analytic Jacobian of [`rhs_linear`].
pub fn jacobian_linear(p: &OdeParams, x: State) -> Matrix2 {
    let State { u, v } = x;
    let mu = p.m + u;
    Matrix2::new(
        u * (2.0 * p.m + u) / (mu * mu) - p.e - 2.0 * p.h * u - p.delta,
        p.delta,
        p.delta,
        p.s - 2.0 * p.s * v - p.delta,
    )
}

/// Partial derivative of the right-hand side with respect to `m`. Identical
/// for both models since dispersal does not involve `m`.
pub fn rhs_dm(p: &OdeParams, x: State) -> State {
    let mu = p.m + x.u;
    State::new(-x.u * x.u / (mu * mu), 0.0)
}

/// `u = H₁(v)`: the `v`-nullcline of the linear model solved for `u`.
pub fn h1(p: &OdeParams, v: f64) -> f64 {
    ((p.delta - p.s) * v + p.s * v * v) / p.delta
}

/// `v = H₂(u)`: the `u`-nullcline of the linear model solved for `v`.
pub fn h2(p: &OdeParams, u: f64) -> f64 {
    u * (-allee_fraction(p.m, u) + p.e + p.delta + p.h * u) / p.delta
}

pub fn h1_prime(p: &OdeParams, v: f64) -> f64 {
    (p.delta - p.s + 2.0 * p.s * v) / p.delta
}

pub fn h2_prime(p: &OdeParams, u: f64) -> f64 {
    let mu = p.m + u;
    -(u * (2.0 * p.m + u) / (mu * mu) - p.e - p.delta - 2.0 * p.h * u) / p.delta
}

/// Divergence of `g·F` for the Dulac function `g = 1/(u²v²)` applied to the
/// nonlinear model:
///
/// ```text
/// ∂(gF₁)/∂u = e/(u²v²) - 1/((m+u)²v²) - δ/(u²v)
/// ∂(gF₂)/∂v = -(s + δu)/(u²v²)
/// ```
///
/// Their sum equals `(e-s)/(u²v²) - 1/((m+u)²v²) - δ(1/(u²v) + 1/(uv²))`.
pub fn dulac_divergence(p: &OdeParams, x: State) -> Result<f64> {
    let State { u, v } = x;
    if !(u > 0.0 && v > 0.0) {
        return Err(Error::Domain(format!(
            "Dulac divergence needs u > 0 and v > 0 (got u = {u}, v = {v})"
        )));
    }
    let mu = p.m + u;
    let u2v2 = u * u * v * v;
    let d_gf1_du = p.e / u2v2 - 1.0 / (mu * mu * v * v) - p.delta / (u * u * v);
    let d_gf2_dv = -(p.s + p.delta * u) / u2v2;
    Ok(d_gf1_du + d_gf2_dv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2(m: f64) -> OdeParams {
        OdeParams::strict(m, 0.1, 0.9, 0.1, 0.9).unwrap()
    }

    fn fd_jacobian(f: impl Fn(State) -> State, x: State, step: f64) -> Matrix2 {
        let du = State::new(step, 0.0);
        let dv = State::new(0.0, step);
        let cu = (f(x + du) - f(x - du)) * (0.5 / step);
        let cv = (f(x + dv) - f(x - dv)) * (0.5 / step);
        Matrix2::new(cu.u, cv.u, cu.v, cv.v)
    }

    #[test]
    fn nondimensionalize_unit_scales() {
        let orig = OriginalParams {
            r: 1.0,
            allee: 2.0,
            d: 0.1,
            b: 0.9,
            a: 1.0,
            c: 1.0,
            dispersal: 0.1,
        };
        let p = nondimensionalize(&orig, Validation::Strict).unwrap();
        assert_eq!((p.m, p.e, p.h, p.delta, p.s), (2.0, 0.1, 0.9, 0.1, 1.0));
    }

    #[test]
    fn nondimensionalize_general_scales() {
        let orig = OriginalParams {
            r: 2.0,
            allee: 1.0,
            d: 0.2,
            b: 1.0,
            a: 1.0,
            c: 2.0,
            dispersal: 0.5,
        };
        let p = nondimensionalize(&orig, Validation::Strict).unwrap();
        assert_eq!((p.m, p.e, p.h, p.delta, p.s), (2.0, 0.1, 0.25, 0.125, 0.5));
    }

    #[test]
    fn nondimensionalize_rejects_bad_inputs() {
        let mut orig = OriginalParams {
            r: 1.0,
            allee: 2.0,
            d: 0.1,
            b: 0.9,
            a: 1.0,
            c: 1.0,
            dispersal: 0.1,
        };
        orig.b = 0.0;
        assert!(matches!(
            nondimensionalize(&orig, Validation::Strict),
            Err(Error::Domain(_))
        ));
        orig.b = 0.9;
        orig.d = 1.5;
        match nondimensionalize(&orig, Validation::Strict) {
            Err(Error::Validation { param, .. }) => assert_eq!(param, "e"),
            other => panic!("expected validation error, got {other:?}"),
        }
        assert!(nondimensionalize(&orig, Validation::Relaxed).is_ok());
    }

    #[test]
    fn strict_mode_rejects_e_out_of_range() {
        assert!(OdeParams::strict(1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(OdeParams::strict(1.0, 0.5, 0.0, 1.0, 1.0).is_err());
        assert!(OdeParams::relaxed(2.0, 2.0, 1.0, 2.5, 1.0).is_ok());
        assert!(OdeParams::relaxed(2.0, 2.0, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn rhs_nonlinear_hand_values() {
        let p = fig2(0.5);
        assert_eq!(rhs_nonlinear(&p, State::new(0.0, 0.7)).u, 0.0);
        // δ = 0 is outside the validated domain but the formula is total.
        let p0 = OdeParams {
            m: 1.0,
            e: 0.5,
            h: 0.5,
            delta: 0.0,
            s: 1.0,
        };
        let f = rhs_nonlinear(&p0, State::new(1.0, 1.0));
        assert!((f.u + 0.5).abs() < 1e-15);
        assert_eq!(f.v, 0.0);
    }

    #[test]
    fn rhs_linear_hand_values() {
        let p = OdeParams::relaxed(2.0, 2.0, 1.0, 2.5, 1.0).unwrap();
        assert_eq!(rhs_linear(&p, State::new(0.0, 0.0)), State::new(0.0, 0.0));
        let f = rhs_linear(&p, State::new(1.0, 1.0));
        assert!((f.u - (1.0 / 3.0 - 3.0)).abs() < 1e-14);
        assert_eq!(f.v, 0.0);
    }

    #[test]
    fn linear_rhs_matches_nullcline_form() {
        let p = OdeParams::relaxed(2.0, 0.1, 1.0, 0.2, 1.0).unwrap();
        for &(u, v) in &[(0.3, 0.6), (1.2, 0.1), (2.0, 3.0)] {
            let f = rhs_linear(&p, State::new(u, v));
            assert!((f.u - p.delta * (v - h2(&p, u))).abs() < 1e-12);
            assert!((f.v - p.delta * (u - h1(&p, v))).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_at_trivial_and_boundary_equilibria() {
        let p = fig2(0.5);
        let j0 = jacobian_nonlinear(&p, State::new(0.0, 0.0));
        assert_eq!(j0, Matrix2::new(-0.1, 0.0, 0.0, 0.9));
        let jv = jacobian_nonlinear(&p, State::new(0.0, 0.9));
        let expect = Matrix2::new(-0.01, 0.0, 0.09, -0.9);
        for (a, b) in [
            (jv.j11, expect.j11),
            (jv.j12, expect.j12),
            (jv.j21, expect.j21),
            (jv.j22, expect.j22),
        ] {
            assert!((a - b).abs() < 1e-12, "{jv:?}");
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let p = fig2(0.5);
        let x = State::new(0.3, 0.6);
        for model in [Model::Nonlinear, Model::Linear] {
            let j = model.jacobian(&p, x);
            let fd = fd_jacobian(|y| model.rhs(&p, y), x, 1e-5);
            assert!((j.j11 - fd.j11).abs() < 1e-6);
            assert!((j.j12 - fd.j12).abs() < 1e-6);
            assert!((j.j21 - fd.j21).abs() < 1e-6);
            assert!((j.j22 - fd.j22).abs() < 1e-6);
        }
    }

    #[test]
    fn nullcline_maps_hand_values() {
        let p = OdeParams::relaxed(2.0, 2.0, 1.0, 2.5, 1.0).unwrap();
        assert_eq!(h1(&p, 0.0), 0.0);
        assert_eq!(h2(&p, 0.0), 0.0);
        assert!((h1(&p, 1.0) - 1.0).abs() < 1e-15);
        assert!((h1_prime(&p, 0.0) - 0.6).abs() < 1e-15);
        assert!((h2_prime(&p, 0.0) - (p.e + p.delta) / p.delta).abs() < 1e-15);
    }

    #[test]
    fn dulac_value_matches_finite_differences() {
        let p = OdeParams::strict(1.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        let x = State::new(1.0, 1.0);
        let div = dulac_divergence(&p, x).unwrap();
        // Central differences of (gF₁, gF₂) with g = 1/(u²v²).
        let g = |y: State| 1.0 / (y.u * y.u * y.v * y.v);
        let step = 1e-6;
        let gf = |y: State| rhs_nonlinear(&p, y) * g(y);
        let fd = (gf(x + State::new(step, 0.0)).u - gf(x - State::new(step, 0.0)).u)
            / (2.0 * step)
            + (gf(x + State::new(0.0, step)).v - gf(x - State::new(0.0, step)).v) / (2.0 * step);
        assert!((div - fd).abs() < 1e-6, "{div} vs {fd}");
        assert!((div + 2.75).abs() < 1e-12);
    }

    #[test]
    fn dulac_rejects_axis_points() {
        let p = fig2(0.5);
        assert!(dulac_divergence(&p, State::new(0.0, 1.0)).is_err());
        assert!(dulac_divergence(&p, State::new(1.0, -1.0)).is_err());
    }

    #[test]
    fn dulac_negative_on_grid_when_e_below_b() {
        let p = OdeParams::strict(0.5, 0.05, 0.9, 0.1, 0.9).unwrap();
        for i in 1..=50 {
            for j in 1..=50 {
                let x = State::new(2.0 * i as f64 / 50.0, 2.0 * j as f64 / 50.0);
                assert!(dulac_divergence(&p, x).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn eigenvalues_of_triangular_and_rotation() {
        let m = Matrix2::new(-0.01, 0.0, 0.09, -0.9);
        let ev = m.eigenvalues();
        assert!((ev[0].re + 0.9).abs() < 1e-15 && (ev[1].re + 0.01).abs() < 1e-15);
        let r = Matrix2::new(-1.0, -2.0, 2.0, -1.0);
        let ev = r.eigenvalues();
        assert!((ev[0].re + 1.0).abs() < 1e-15 && (ev[1].im - 2.0).abs() < 1e-15);
    }
}
