//! Closed-form equilibria, threshold quantities, local stability labels,
//! regime identification and global-stability verdicts.
//!
//! Stability labels come from the closed-form case analysis, not from raw
//! eigenvalues. [`classify_equilibrium`] recomputes the eigenvalues of the
//! analytic Jacobian and reports an [`Error::Inconsistent`] if their signs
//! disagree with the label.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    h1, h2, jacobian_linear, jacobian_nonlinear, rhs_linear, Matrix2, Model, OdeParams, State,
};

/// Relative width of the band inside which two thresholds count as equal.
pub const EQUALITY_RTOL: f64 = 1e-9;

/// `|a - b| <= 1e-9 · max(1, |a|)`.
pub fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQUALITY_RTOL * a.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    Equal,
    Above,
}

fn side(x: f64, threshold: f64) -> Side {
    if nearly_equal(x, threshold) {
        Side::Equal
    } else if x < threshold {
        Side::Below
    } else {
        Side::Above
    }
}

/// Roots of `a x² + b x + c = 0` (`a > 0`, `disc = b² - 4ac ≥ 0`) as
/// `(larger, smaller)`. The larger-magnitude root is formed first and the
/// other recovered from the product `c/a`, which avoids cancellation when
/// the roots are nearly equal or one is tiny.
pub fn stable_quadratic_roots(a: f64, b: f64, c: f64, disc: f64) -> (f64, f64) {
    let sign = if b >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sign * disc.max(0.0).sqrt());
    if q == 0.0 {
        return (0.0, 0.0);
    }
    let (r1, r2) = (q / a, c / q);
    if r1 >= r2 {
        (r1, r2)
    } else {
        (r2, r1)
    }
}

/// Thresholds and discriminants of the equilibrium equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub e: f64,
    /// `B = sδ/(s+δ)`.
    pub b: f64,
    pub h_plus_delta: f64,
    pub h_plus_b: f64,
    /// Lower root of `Δ₁(m) = 0`; boundary fold.
    pub m0: f64,
    /// Upper root of `Δ₁(m) = 0`.
    pub m1: f64,
    /// Lower root of `Δ₃(m) = 0`; interior fold. Only defined when `e > B`.
    pub mstar: Option<f64>,
    /// Upper root of `Δ₃(m) = 0`. Only defined when `e > B`.
    pub m1star: Option<f64>,
    /// `(1-e)/(h+δ)`: no axis equilibria for `m` at or above this value.
    pub axis_cutoff: f64,
    /// `1/(h+B)`: the critical Allee constant when `e = B`.
    pub critical_m_e_eq_b: f64,
}

impl DerivedQuantities {
    /// Discriminant of the axis quadratic,
    /// `Δ₁(m) = (h+δ)²m² - 2(1+e)(h+δ)m + (1-e)²`.
    pub fn disc1(&self, m: f64) -> f64 {
        let k = self.h_plus_delta;
        let km = k * m;
        km * km - 2.0 * (1.0 + self.e) * km + (1.0 - self.e).powi(2)
    }

    /// Discriminant of the interior quadratic,
    /// `Δ₃(m) = (h+B)²m² - 2(e-B+1)(h+B)m + (e-B-1)²`.
    pub fn disc3(&self, m: f64) -> f64 {
        let k = self.h_plus_b;
        let km = k * m;
        let g = self.e - self.b;
        km * km - 2.0 * (g + 1.0) * km + (g - 1.0).powi(2)
    }

    /// How `e` compares with `B`, using the equality band.
    pub fn e_vs_b(&self) -> std::cmp::Ordering {
        match side(self.e, self.b) {
            Side::Below => std::cmp::Ordering::Less,
            Side::Equal => std::cmp::Ordering::Equal,
            Side::Above => std::cmp::Ordering::Greater,
        }
    }
}

pub fn derived_thresholds(p: &OdeParams) -> DerivedQuantities {
    let b = p.b();
    let hd = p.h + p.delta;
    let hb = p.h + b;
    let root_e = p.e.sqrt();
    let (mstar, m1star) = if p.e > b && !nearly_equal(p.e, b) {
        let g = (p.e - b).sqrt();
        (Some((1.0 - g).powi(2) / hb), Some((1.0 + g).powi(2) / hb))
    } else {
        (None, None)
    };
    DerivedQuantities {
        e: p.e,
        b,
        h_plus_delta: hd,
        h_plus_b: hb,
        m0: (1.0 - root_e).powi(2) / hd,
        m1: (1.0 + root_e).powi(2) / hd,
        mstar,
        m1star,
        axis_cutoff: (1.0 - p.e) / hd,
        critical_m_e_eq_b: 1.0 / hb,
    }
}

/// Root of the axis equation `(h+δ)ū² + [m(h+δ)+e-1]ū + me = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisRoot {
    /// `ū₁`, the larger root.
    Upper,
    /// `ū₂`, the smaller root.
    Lower,
    /// `ū₃`, the double root at `m = m₀`.
    Double,
}

/// Root of the interior equation `(h+B)u² + [m(h+B)+e-1-B]u + m(e-B) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PositiveRoot {
    /// `E₁`, the larger (stable) root.
    Upper,
    /// `E₂`, the smaller (saddle) root.
    Lower,
    /// `E₃`, the double root at `m = m*`.
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumKind {
    /// `E₀ = (0, 0)` of the nonlinear model.
    Trivial,
    /// `E_v = (0, s/(s+δ))`.
    BoundaryV,
    /// `(ū, 0)` on the `u` axis.
    BoundaryU(AxisRoot),
    /// Interior equilibrium of the nonlinear model.
    Positive(PositiveRoot),
    /// `O = (0, 0)` of the linear model.
    LinearOrigin,
    /// Interior equilibrium of the linear model.
    LinearPositive,
}

impl EquilibriumKind {
    pub fn name(self) -> &'static str {
        match self {
            EquilibriumKind::Trivial => "E0",
            EquilibriumKind::BoundaryV => "Ev",
            EquilibriumKind::BoundaryU(AxisRoot::Upper) => "ubar1",
            EquilibriumKind::BoundaryU(AxisRoot::Lower) => "ubar2",
            EquilibriumKind::BoundaryU(AxisRoot::Double) => "ubar3",
            EquilibriumKind::Positive(PositiveRoot::Upper) => "E1",
            EquilibriumKind::Positive(PositiveRoot::Lower) => "E2",
            EquilibriumKind::Positive(PositiveRoot::Double) => "E3",
            EquilibriumKind::LinearOrigin => "O",
            EquilibriumKind::LinearPositive => "Ehat",
        }
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which half-plane holds the named sector of a saddle-node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    ParabolicRight,
    HyperbolicRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    StableNode,
    StableFocus,
    Saddle,
    UnstableNode,
    UnstableFocus,
    AttractingSaddleNode { sector: Option<Sector> },
    RepellingSaddleNode,
    Degenerate,
}

impl Stability {
    pub fn is_stable(self) -> bool {
        matches!(self, Stability::StableNode | Stability::StableFocus)
    }

    pub fn name(self) -> &'static str {
        match self {
            Stability::StableNode => "stable-node",
            Stability::StableFocus => "stable-focus",
            Stability::Saddle => "saddle",
            Stability::UnstableNode => "unstable-node",
            Stability::UnstableFocus => "unstable-focus",
            Stability::AttractingSaddleNode { sector: None } => "attracting-saddle-node",
            Stability::AttractingSaddleNode {
                sector: Some(Sector::ParabolicRight),
            } => "attracting-saddle-node/parabolic-right",
            Stability::AttractingSaddleNode {
                sector: Some(Sector::HyperbolicRight),
            } => "attracting-saddle-node/hyperbolic-right",
            Stability::RepellingSaddleNode => "repelling-saddle-node",
            Stability::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub state: State,
    pub stability: Stability,
    /// True when the label comes from a non-hyperbolic case (zero eigenvalue).
    pub degenerate: bool,
    pub eigenvalues: [Complex64; 2],
}

impl Equilibrium {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
}

fn stable_by_discriminant(j: &Matrix2) -> Stability {
    if j.discriminant() < 0.0 {
        Stability::StableFocus
    } else {
        Stability::StableNode
    }
}

/// Theorem-based label for an equilibrium of the nonlinear model together
/// with a flag marking non-hyperbolic cases.
fn theorem_label(p: &OdeParams, kind: EquilibriumKind, x: State) -> (Stability, bool) {
    let d = derived_thresholds(p);
    match kind {
        EquilibriumKind::Trivial => (Stability::Saddle, false),
        EquilibriumKind::BoundaryV => match d.e_vs_b() {
            std::cmp::Ordering::Greater => (Stability::StableNode, false),
            std::cmp::Ordering::Less => (Stability::Saddle, false),
            std::cmp::Ordering::Equal => {
                let q = p.m * d.h_plus_b;
                let label = match side(q, 1.0) {
                    Side::Above => Stability::AttractingSaddleNode {
                        sector: Some(Sector::ParabolicRight),
                    },
                    Side::Below => Stability::AttractingSaddleNode {
                        sector: Some(Sector::HyperbolicRight),
                    },
                    Side::Equal => Stability::StableNode,
                };
                (label, true)
            }
        },
        EquilibriumKind::BoundaryU(AxisRoot::Double) => (Stability::RepellingSaddleNode, true),
        EquilibriumKind::BoundaryU(_) => {
            // Triangular Jacobian: θ₁ = ū[m/(m+ū)² - (h+δ)], θ₂ = s + δū > 0.
            let mu = p.m + x.u;
            let theta1 = x.u * (p.m / (mu * mu) - d.h_plus_delta);
            if theta1 < 0.0 {
                (Stability::Saddle, false)
            } else {
                (Stability::UnstableNode, false)
            }
        }
        EquilibriumKind::Positive(PositiveRoot::Upper) => {
            (stable_by_discriminant(&jacobian_nonlinear(p, x)), false)
        }
        EquilibriumKind::Positive(PositiveRoot::Lower) => (Stability::Saddle, false),
        EquilibriumKind::Positive(PositiveRoot::Double) => {
            (Stability::AttractingSaddleNode { sector: None }, true)
        }
        EquilibriumKind::LinearOrigin | EquilibriumKind::LinearPositive => {
            label_from_eigenvalues(&jacobian_linear(p, x))
        }
    }
}

/// Label read off the eigenvalues alone; used where no closed-form case
/// analysis exists (numerically enumerated linear-model equilibria).
pub fn label_from_eigenvalues(j: &Matrix2) -> (Stability, bool) {
    let ev = j.eigenvalues();
    let scale = j.trace().abs().max(j.det().abs().sqrt()).max(1.0);
    let zero = 1e-9 * scale;
    let (lo, hi) = (ev[0].re, ev[1].re);
    let complex = ev[0].im != 0.0;
    if lo.abs() <= zero || hi.abs() <= zero {
        return (Stability::Degenerate, true);
    }
    let label = match (lo < 0.0, hi < 0.0) {
        (true, true) if complex => Stability::StableFocus,
        (true, true) => Stability::StableNode,
        (false, false) if complex => Stability::UnstableFocus,
        (false, false) => Stability::UnstableNode,
        _ => Stability::Saddle,
    };
    (label, false)
}

fn make(p: &OdeParams, model: Model, kind: EquilibriumKind, state: State) -> Equilibrium {
    let (stability, degenerate) = match model {
        Model::Nonlinear => theorem_label(p, kind, state),
        Model::Linear => label_from_eigenvalues(&jacobian_linear(p, state)),
    };
    Equilibrium {
        kind,
        state,
        stability,
        degenerate,
        eigenvalues: model.jacobian(p, state).eigenvalues(),
    }
}

/// `E₀`, `E_v` and the axis equilibria `(ū, 0)`.
pub fn boundary_equilibria(p: &OdeParams) -> Vec<Equilibrium> {
    let d = derived_thresholds(p);
    let mut out = vec![
        make(p, Model::Nonlinear, EquilibriumKind::Trivial, State::new(0.0, 0.0)),
        make(
            p,
            Model::Nonlinear,
            EquilibriumKind::BoundaryV,
            State::new(0.0, p.s / (p.s + p.delta)),
        ),
    ];
    let k = d.h_plus_delta;
    match side(p.m, d.m0) {
        Side::Equal => {
            let u = (1.0 - p.e - p.m * k) / (2.0 * k);
            out.push(make(
                p,
                Model::Nonlinear,
                EquilibriumKind::BoundaryU(AxisRoot::Double),
                State::new(u, 0.0),
            ));
        }
        Side::Below => {
            let (hi, lo) = stable_quadratic_roots(k, p.m * k + p.e - 1.0, p.m * p.e, d.disc1(p.m));
            out.push(make(
                p,
                Model::Nonlinear,
                EquilibriumKind::BoundaryU(AxisRoot::Upper),
                State::new(hi, 0.0),
            ));
            out.push(make(
                p,
                Model::Nonlinear,
                EquilibriumKind::BoundaryU(AxisRoot::Lower),
                State::new(lo, 0.0),
            ));
        }
        Side::Above => {}
    }
    out
}

fn v_of_u(p: &OdeParams, u: f64) -> f64 {
    (p.s + p.delta * u) / (p.s + p.delta)
}

/// Interior equilibria of the nonlinear model.
pub fn positive_equilibria(p: &OdeParams) -> Vec<Equilibrium> {
    let d = derived_thresholds(p);
    let k = d.h_plus_b;
    let b_coef = p.m * k + p.e - 1.0 - d.b;
    let c_coef = p.m * (p.e - d.b);
    let point = |kind, u: f64| make(p, Model::Nonlinear, kind, State::new(u, v_of_u(p, u)));

    match d.e_vs_b() {
        std::cmp::Ordering::Less => {
            let disc = b_coef * b_coef - 4.0 * k * c_coef;
            let (hi, _) = stable_quadratic_roots(k, b_coef, c_coef, disc);
            vec![point(EquilibriumKind::Positive(PositiveRoot::Upper), hi)]
        }
        std::cmp::Ordering::Equal => {
            if side(p.m, d.critical_m_e_eq_b) == Side::Below {
                let u = (1.0 - p.m * k) / k;
                vec![point(EquilibriumKind::Positive(PositiveRoot::Upper), u)]
            } else {
                Vec::new()
            }
        }
        std::cmp::Ordering::Greater => {
            let mstar = d.mstar.expect("m* is defined whenever e > B");
            match side(p.m, mstar) {
                Side::Equal => {
                    let u = (1.0 + d.b - p.e - p.m * k) / (2.0 * k);
                    vec![point(EquilibriumKind::Positive(PositiveRoot::Double), u)]
                }
                Side::Below => {
                    let (hi, lo) = stable_quadratic_roots(k, b_coef, c_coef, d.disc3(p.m));
                    vec![
                        point(EquilibriumKind::Positive(PositiveRoot::Upper), hi),
                        point(EquilibriumKind::Positive(PositiveRoot::Lower), lo),
                    ]
                }
                Side::Above => Vec::new(),
            }
        }
    }
}

/// Boundary followed by interior equilibria.
pub fn all_equilibria(p: &OdeParams) -> Vec<Equilibrium> {
    let mut all = boundary_equilibria(p);
    all.extend(positive_equilibria(p));
    all
}

/// Relative size below which an eigenvalue counts as zero in a
/// non-hyperbolic case.
const ZERO_EIGEN_RTOL: f64 = 1e-7;

fn check_eigen_signs(label: Stability, degenerate: bool, j: &Matrix2) -> std::result::Result<(), String> {
    let ev = j.eigenvalues();
    let scale = j.trace().abs().max(j.det().abs().sqrt()).max(1.0);
    let tiny = 1e-9 * scale;
    let (lo, hi) = (ev[0].re, ev[1].re);
    let ok = if degenerate {
        let zero = ZERO_EIGEN_RTOL * scale;
        let (small, other) = if lo.abs() <= hi.abs() { (lo, hi) } else { (hi, lo) };
        let nonzero_ok = match label {
            Stability::RepellingSaddleNode => other > 0.0,
            _ => other < 0.0,
        };
        small.abs() <= zero && nonzero_ok
    } else {
        match label {
            Stability::StableNode | Stability::StableFocus => hi < tiny,
            Stability::UnstableNode | Stability::UnstableFocus => lo > -tiny,
            Stability::Saddle => lo < tiny && hi > -tiny,
            _ => true,
        }
    };
    if ok {
        Ok(())
    } else {
        Err(format!("label {label} disagrees with eigenvalues {} and {}", ev[0], ev[1]))
    }
}

/// Theorem-based label of `eq`, cross-checked against the eigenvalues of the
/// analytic Jacobian.
pub fn classify_equilibrium(p: &OdeParams, eq: &Equilibrium) -> Result<Stability> {
    let (model, (label, degenerate)) = match eq.kind {
        EquilibriumKind::LinearOrigin | EquilibriumKind::LinearPositive => (
            Model::Linear,
            (eq.stability, eq.degenerate),
        ),
        kind => (Model::Nonlinear, theorem_label(p, kind, eq.state)),
    };
    let j = model.jacobian(p, eq.state);
    check_eigen_signs(label, degenerate, &j)
        .map_err(|msg| Error::Inconsistent(format!("{} at ({}, {}): {msg}", eq.kind, eq.state.u, eq.state.v)))?;
    Ok(label)
}

/// The nine phase-portrait cases, distinguished by `e` against `B` and `m`
/// against the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeCase {
    /// `e < B`.
    A,
    /// `e = B`, `m > 1/(h+B)`.
    B,
    /// `e = B`, `m = 1/(h+B)`.
    C,
    /// `e = B`, `m < 1/(h+B)`.
    D,
    /// `B < e < 1`, `m < m₀`.
    E,
    /// `B < e < 1`, `m = m₀`.
    F,
    /// `B < e < 1`, `m₀ < m < m*`.
    G,
    /// `B < e < 1`, `m = m*`.
    H,
    /// `B < e < 1`, `m > m*`.
    I,
}

impl RegimeCase {
    pub fn label(self) -> &'static str {
        match self {
            RegimeCase::A => "(a)",
            RegimeCase::B => "(b)",
            RegimeCase::C => "(c)",
            RegimeCase::D => "(d)",
            RegimeCase::E => "(e)",
            RegimeCase::F => "(f)",
            RegimeCase::G => "(g)",
            RegimeCase::H => "(h)",
            RegimeCase::I => "(i)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GlobalVerdict {
    #[serde(rename = "Ev-GAS")]
    EvGas,
    #[serde(rename = "E1-GAS")]
    E1Gas,
    #[serde(rename = "Origin-GAS")]
    OriginGas,
    #[serde(rename = "Ehat-GAS")]
    EhatGas,
    Bistable,
    Undetermined,
}

impl GlobalVerdict {
    pub fn name(self) -> &'static str {
        match self {
            GlobalVerdict::EvGas => "Ev-GAS",
            GlobalVerdict::E1Gas => "E1-GAS",
            GlobalVerdict::OriginGas => "Origin-GAS",
            GlobalVerdict::EhatGas => "Ehat-GAS",
            GlobalVerdict::Bistable => "Bistable",
            GlobalVerdict::Undetermined => "Undetermined",
        }
    }
}

impl fmt::Display for GlobalVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub derived: DerivedQuantities,
    pub case: RegimeCase,
    pub equilibria: Vec<Equilibrium>,
    pub verdict: GlobalVerdict,
}

pub fn regime_case(p: &OdeParams) -> RegimeCase {
    let d = derived_thresholds(p);
    match d.e_vs_b() {
        std::cmp::Ordering::Less => RegimeCase::A,
        std::cmp::Ordering::Equal => match side(p.m, d.critical_m_e_eq_b) {
            Side::Above => RegimeCase::B,
            Side::Equal => RegimeCase::C,
            Side::Below => RegimeCase::D,
        },
        std::cmp::Ordering::Greater => match side(p.m, d.m0) {
            Side::Below => RegimeCase::E,
            Side::Equal => RegimeCase::F,
            Side::Above => match side(p.m, d.mstar.expect("m* defined for e > B")) {
                Side::Below => RegimeCase::G,
                Side::Equal => RegimeCase::H,
                Side::Above => RegimeCase::I,
            },
        },
    }
}

/// Global verdict implied by the case analysis; only emitted when the
/// hypotheses hold outside the equality bands.
pub fn global_verdict(case: RegimeCase) -> GlobalVerdict {
    match case {
        RegimeCase::A | RegimeCase::D => GlobalVerdict::E1Gas,
        RegimeCase::I => GlobalVerdict::EvGas,
        RegimeCase::E | RegimeCase::F | RegimeCase::G => GlobalVerdict::Bistable,
        RegimeCase::B | RegimeCase::C | RegimeCase::H => GlobalVerdict::Undetermined,
    }
}

/// Case label, classified equilibria and global verdict for strict-mode
/// parameters.
pub fn regime_report(p: &OdeParams) -> Result<RegimeReport> {
    let case = regime_case(p);
    let equilibria = all_equilibria(p);
    for eq in &equilibria {
        classify_equilibrium(p, eq)?;
    }
    Ok(RegimeReport {
        derived: derived_thresholds(p),
        case,
        equilibria,
        verdict: global_verdict(case),
    })
}

/// Which sufficient condition for the linear model applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearRegime {
    /// `m ≥ 1/h`, `e > s`, `δ > es/(e-s)`: no interior equilibrium.
    Extinction,
    /// `m ≥ 1/h`, `0 < δ ≤ s`: unique interior equilibrium.
    UniqueInterior,
    /// Neither condition holds; equilibria are enumerated numerically.
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearAnalysis {
    pub regime: LinearRegime,
    pub equilibria: Vec<Equilibrium>,
    pub verdict: GlobalVerdict,
}

fn at_least(x: f64, threshold: f64) -> bool {
    side(x, threshold) != Side::Below
}

pub fn linear_regime(p: &OdeParams) -> LinearRegime {
    let allee_large = at_least(p.m, 1.0 / p.h);
    if allee_large && p.e > p.s && side(p.delta, p.e * p.s / (p.e - p.s)) == Side::Above {
        LinearRegime::Extinction
    } else if allee_large && !(side(p.delta, p.s) == Side::Above) {
        LinearRegime::UniqueInterior
    } else {
        LinearRegime::Unclassified
    }
}

/// Equilibria and verdict for the linear-dispersal model (relaxed mode).
pub fn linear_equilibria(p: &OdeParams) -> Result<LinearAnalysis> {
    let origin = State::new(0.0, 0.0);
    let regime = linear_regime(p);
    let (equilibria, verdict) = match regime {
        LinearRegime::Extinction => {
            let eq = make(p, Model::Linear, EquilibriumKind::LinearOrigin, origin);
            (vec![eq], GlobalVerdict::OriginGas)
        }
        LinearRegime::UniqueInterior => {
            let u = linear_fixed_point(p)?;
            let interior = newton_polish_linear(p, State::new(u, h2(p, u)))?;
            let eqs = vec![
                make(p, Model::Linear, EquilibriumKind::LinearOrigin, origin),
                make(p, Model::Linear, EquilibriumKind::LinearPositive, interior),
            ];
            let verdict = if side(p.delta, (p.s - p.e) / 2.0) == Side::Below {
                GlobalVerdict::EhatGas
            } else {
                GlobalVerdict::Undetermined
            };
            (eqs, verdict)
        }
        LinearRegime::Unclassified => {
            let mut eqs = vec![make(p, Model::Linear, EquilibriumKind::LinearOrigin, origin)];
            for x in enumerate_linear_interior(p, 10.0, 4000)? {
                eqs.push(make(p, Model::Linear, EquilibriumKind::LinearPositive, x));
            }
            (eqs, GlobalVerdict::Undetermined)
        }
    };
    for eq in &equilibria {
        classify_equilibrium(p, eq)?;
    }
    Ok(LinearAnalysis {
        regime,
        equilibria,
        verdict,
    })
}

/// Positive fixed point of `u ↦ H₁(H₂(u))`, located by damped iteration
/// (`ω = 0.5`) safeguarded by a sign bracket on `u - H₁(H₂(u))`.
pub fn linear_fixed_point(p: &OdeParams) -> Result<f64> {
    const OMEGA: f64 = 0.5;
    let map = |u: f64| h1(p, h2(p, u));
    let gap = |u: f64| u - map(u);

    let mut lo = 1e-9;
    if gap(lo) <= 0.0 {
        return Err(Error::Numeric(format!(
            "fixed-point bracket: u - H1(H2(u)) = {} is not positive near 0",
            gap(lo)
        )));
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while gap(hi) >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(Error::Numeric(
                "fixed-point bracket: u - H1(H2(u)) stays non-negative up to 2^200".into(),
            ));
        }
    }

    let mut u = 0.5 * (lo + hi);
    let mut g = gap(u);
    for _ in 0..1000 {
        if g > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        if g == 0.0 || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(u);
        }
        let damped = (1.0 - OMEGA) * u + OMEGA * map(u);
        let candidate = if damped > lo && damped < hi {
            let gc = gap(damped);
            if gc.abs() < 0.5 * g.abs() {
                Some((damped, gc))
            } else {
                None
            }
        } else {
            None
        };
        (u, g) = candidate.unwrap_or_else(|| {
            let mid = 0.5 * (lo + hi);
            (mid, gap(mid))
        });
    }
    Err(Error::Numeric(format!(
        "fixed-point iteration did not converge; bracket [{lo}, {hi}]"
    )))
}

fn newton_polish_linear(p: &OdeParams, start: State) -> Result<State> {
    let mut x = start;
    for _ in 0..20 {
        let f = rhs_linear(p, x);
        if f.max_norm() < 1e-15 {
            break;
        }
        let j = jacobian_linear(p, x);
        let det = j.det();
        if det == 0.0 {
            break;
        }
        let dx = State::new(
            (j.j22 * f.u - j.j12 * f.v) / det,
            (-j.j21 * f.u + j.j11 * f.v) / det,
        );
        x = x - dx;
        if dx.max_norm() <= 1e-16 * x.max_norm().max(1.0) {
            break;
        }
    }
    let residual = rhs_linear(p, x).max_norm();
    if residual < 1e-10 && x.u > 0.0 && x.v > 0.0 {
        Ok(x)
    } else {
        Err(Error::Numeric(format!(
            "Newton polish of linear-model equilibrium ended at ({}, {}) with residual {residual}",
            x.u, x.v
        )))
    }
}

/// Interior zeros of the linear model in `(0, u_max]`, found by scanning
/// `u - H₁(H₂(u))` for sign changes and polishing each bracketed root.
fn enumerate_linear_interior(p: &OdeParams, u_max: f64, samples: usize) -> Result<Vec<State>> {
    let gap = |u: f64| u - h1(p, h2(p, u));
    let mut roots: Vec<State> = Vec::new();
    let mut prev_u = u_max / samples as f64 * 1e-3;
    let mut prev_g = gap(prev_u);
    for i in 1..=samples {
        let u = u_max * i as f64 / samples as f64;
        let g = gap(u);
        if prev_g == 0.0 || prev_g.signum() != g.signum() {
            let (mut a, mut b) = (prev_u, u);
            let ga = gap(a);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if gap(mid).signum() == ga.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let root = 0.5 * (a + b);
            let v = h2(p, root);
            if v > 0.0 {
                if let Ok(x) = newton_polish_linear(p, State::new(root, v)) {
                    if roots.iter().all(|r| r.dist(x) > 1e-8) {
                        roots.push(x);
                    }
                }
            }
        }
        prev_u = u;
        prev_g = g;
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rhs_nonlinear;

    fn fig2(m: f64) -> OdeParams {
        OdeParams::strict(m, 0.1, 0.9, 0.1, 0.9).unwrap()
    }

    fn find(eqs: &[Equilibrium], kind: EquilibriumKind) -> Equilibrium {
        *eqs.iter().find(|e| e.kind == kind).unwrap_or_else(|| panic!("{kind} missing"))
    }

    #[test]
    fn thresholds_for_fig2_parameters() {
        let d = derived_thresholds(&fig2(0.5));
        assert!((d.b - 0.09).abs() <= f64::EPSILON * 0.09);
        assert!((d.m0 - 0.467544).abs() < 1e-6);
        let mstar = d.mstar.unwrap();
        assert!((mstar - 0.818182).abs() < 1e-6);
        assert!(d.disc1(d.m0).abs() < 1e-12);
        assert!(d.disc3(mstar).abs() < 1e-12);
        assert!(d.m0 < d.axis_cutoff && d.axis_cutoff < d.m1);
        let interior_cutoff = (1.0 + d.b - d.e) / d.h_plus_b;
        assert!(mstar < interior_cutoff && interior_cutoff < d.m1star.unwrap());
    }

    #[test]
    fn thresholds_small_dispersal_limit() {
        let p = OdeParams::strict(0.5, 0.1, 0.9, 1e-14, 0.9).unwrap();
        let d = derived_thresholds(&p);
        assert!(d.b < 1e-13);
        assert!((d.mstar.unwrap() - d.m0).abs() < 1e-12);
    }

    #[test]
    fn thresholds_when_e_equals_b() {
        let d = derived_thresholds(&OdeParams::strict(0.5, 0.09, 0.9, 0.1, 0.9).unwrap());
        assert_eq!(d.e_vs_b(), std::cmp::Ordering::Equal);
        assert!(d.mstar.is_none() && d.m1star.is_none());
        assert!((d.critical_m_e_eq_b - 1.0 / 0.99).abs() < 1e-12);
    }

    #[test]
    fn axis_equilibria_two_roots() {
        let eqs = boundary_equilibria(&fig2(0.4));
        let u1 = find(&eqs, EquilibriumKind::BoundaryU(AxisRoot::Upper)).state.u;
        let u2 = find(&eqs, EquilibriumKind::BoundaryU(AxisRoot::Lower)).state.u;
        assert!((u1 - 0.4).abs() < 1e-12 && (u2 - 0.1).abs() < 1e-12);
        for u in [u1, u2] {
            let residual = u * u - 0.5 * u + 0.04;
            assert!(residual.abs() < 1e-10);
        }
    }

    #[test]
    fn axis_double_root_at_m0() {
        let m0 = derived_thresholds(&fig2(0.5)).m0;
        let p = fig2(m0);
        let eqs = boundary_equilibria(&p);
        assert_eq!(eqs.len(), 3);
        let u3 = find(&eqs, EquilibriumKind::BoundaryU(AxisRoot::Double));
        assert!((u3.state.u - 0.216228).abs() < 1e-6);
        assert!((u3.state.u - (m0 * p.e).sqrt()).abs() < 1e-12);
        assert_eq!(u3.stability, Stability::RepellingSaddleNode);
    }

    #[test]
    fn axis_none_above_m0() {
        let eqs = boundary_equilibria(&fig2(0.6));
        assert_eq!(eqs.len(), 2);
        let ev = find(&eqs, EquilibriumKind::BoundaryV);
        assert!((ev.state.v - 0.9).abs() < 1e-15);
    }

    #[test]
    fn positive_pair_in_bistable_regime() {
        let p = fig2(0.5);
        let eqs = positive_equilibria(&p);
        assert_eq!(eqs.len(), 2);
        let e1 = find(&eqs, EquilibriumKind::Positive(PositiveRoot::Upper));
        let e2 = find(&eqs, EquilibriumKind::Positive(PositiveRoot::Lower));
        assert!((e1.state.u - 0.489686).abs() < 1e-6 && (e1.state.v - 0.948969).abs() < 1e-6);
        assert!((e2.state.u - 0.010314).abs() < 1e-6 && (e2.state.v - 0.901031).abs() < 1e-6);
        for e in [e1, e2] {
            assert!(rhs_nonlinear(&p, e.state).max_norm() < 1e-12);
        }
        assert!(e1.stability.is_stable());
        assert_eq!(e2.stability, Stability::Saddle);
        assert!(jacobian_nonlinear(&p, e2.state).det() < 0.0);
    }

    #[test]
    fn positive_root_on_e_equals_b() {
        let p = OdeParams::strict(0.5, 0.09, 0.9, 0.1, 0.9).unwrap();
        let eqs = positive_equilibria(&p);
        assert_eq!(eqs.len(), 1);
        assert!((eqs[0].state.u - 0.505 / 0.99).abs() < 1e-12);
        assert!((eqs[0].state.v - 0.951010).abs() < 1e-6);
        let above = OdeParams::strict(1.2, 0.09, 0.9, 0.1, 0.9).unwrap();
        assert!(positive_equilibria(&above).is_empty());
    }

    #[test]
    fn no_positive_root_above_mstar() {
        assert!(positive_equilibria(&fig2(0.9)).is_empty());
    }

    #[test]
    fn double_positive_root_at_mstar() {
        let mstar = derived_thresholds(&fig2(0.5)).mstar.unwrap();
        let p = fig2(mstar);
        let eqs = positive_equilibria(&p);
        assert_eq!(eqs.len(), 1);
        assert!((eqs[0].state.u - 1.0 / 11.0).abs() < 1e-12);
        assert_eq!(
            eqs[0].stability,
            Stability::AttractingSaddleNode { sector: None }
        );
        assert_eq!(classify_equilibrium(&p, &eqs[0]).unwrap(), eqs[0].stability);
    }

    #[test]
    fn boundary_v_labels_when_e_equals_b() {
        let thr = 1.0 / (0.9 + 0.9 * 0.1 / 1.0);
        let cases = [
            (thr, Stability::StableNode),
            (
                1.5,
                Stability::AttractingSaddleNode {
                    sector: Some(Sector::ParabolicRight),
                },
            ),
            (
                0.5,
                Stability::AttractingSaddleNode {
                    sector: Some(Sector::HyperbolicRight),
                },
            ),
        ];
        for (m, expect) in cases {
            let p = OdeParams::strict(m, 0.09, 0.9, 0.1, 0.9).unwrap();
            let ev = find(&boundary_equilibria(&p), EquilibriumKind::BoundaryV);
            assert_eq!(classify_equilibrium(&p, &ev).unwrap(), expect, "m = {m}");
        }
    }

    #[test]
    fn trivial_is_always_a_saddle() {
        for m in [0.1, 0.5, 2.0] {
            let p = fig2(m);
            let e0 = find(&boundary_equilibria(&p), EquilibriumKind::Trivial);
            assert_eq!(classify_equilibrium(&p, &e0).unwrap(), Stability::Saddle);
        }
    }

    #[test]
    fn inconsistent_label_is_reported() {
        let p = fig2(0.5);
        let mut e2 = find(&positive_equilibria(&p), EquilibriumKind::Positive(PositiveRoot::Lower));
        // Lie about the kind: E₂ is a saddle, not the stable E₁.
        e2.kind = EquilibriumKind::Positive(PositiveRoot::Upper);
        assert!(matches!(
            classify_equilibrium(&p, &e2),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn regime_examples() {
        let r = regime_report(&fig2(0.9)).unwrap();
        assert_eq!((r.case, r.verdict), (RegimeCase::I, GlobalVerdict::EvGas));
        let r = regime_report(&OdeParams::strict(2.0, 0.05, 0.9, 0.1, 0.9).unwrap()).unwrap();
        assert_eq!((r.case, r.verdict), (RegimeCase::A, GlobalVerdict::E1Gas));
        let r = regime_report(&fig2(0.5)).unwrap();
        assert_eq!((r.case, r.verdict), (RegimeCase::G, GlobalVerdict::Bistable));
        let r = regime_report(&fig2(0.4)).unwrap();
        assert_eq!(r.case, RegimeCase::E);
    }

    #[test]
    fn linear_extinction_regime() {
        let p = OdeParams::relaxed(2.0, 2.0, 1.0, 2.5, 1.0).unwrap();
        let a = linear_equilibria(&p).unwrap();
        assert_eq!(a.regime, LinearRegime::Extinction);
        assert_eq!(a.verdict, GlobalVerdict::OriginGas);
        assert_eq!(a.equilibria.len(), 1);
        assert!(a.equilibria[0].stability.is_stable());
    }

    #[test]
    fn linear_unique_interior() {
        let p = OdeParams::relaxed(2.0, 0.1, 1.0, 0.2, 1.0).unwrap();
        let a = linear_equilibria(&p).unwrap();
        assert_eq!(a.verdict, GlobalVerdict::EhatGas);
        let o = find(&a.equilibria, EquilibriumKind::LinearOrigin);
        assert_eq!(o.stability, Stability::Saddle);
        let e = find(&a.equilibria, EquilibriumKind::LinearPositive);
        assert!(rhs_linear(&p, e.state).max_norm() < 1e-10);
        assert!((e.state.u - h1(&p, e.state.v)).abs() < 1e-9);
        assert!((e.state.v - h2(&p, e.state.u)).abs() < 1e-9);
        assert!(e.stability.is_stable());
    }

    #[test]
    fn linear_unclassified() {
        let p = OdeParams::relaxed(2.0, 2.0, 1.0, 1.5, 1.0).unwrap();
        let a = linear_equilibria(&p).unwrap();
        assert_eq!(a.regime, LinearRegime::Unclassified);
        assert_eq!(a.verdict, GlobalVerdict::Undetermined);
        for eq in &a.equilibria {
            assert!(rhs_linear(&p, eq.state).max_norm() < 1e-10);
        }
    }

    #[test]
    fn quadratic_roots_stable_against_cancellation() {
        // x² - 1e8 x + 1 = 0: small root 1e-8 is lost by the textbook formula.
        let (hi, lo) = stable_quadratic_roots(1.0, -1e8, 1.0, 1e16 - 4.0);
        assert!((hi - 1e8).abs() / 1e8 < 1e-15);
        assert!((lo - 1e-8).abs() / 1e-8 < 1e-12);
    }
}
