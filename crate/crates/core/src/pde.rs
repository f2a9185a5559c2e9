//! Method-of-lines solver for the reaction-diffusion version of the model on
//! an interval `[0, L]` with no-flux boundaries.
//!
//! ```text
//! u_t = δ₁ D[u] + s₁(x) u (u/(m(x)+u) - e(x) - h(x) u)
//! v_t = δ₂ D[v] + s(x)  v (v/(m₁(x)+v) - e₁(x) - h₁(x) v)
//! ```
//!
//! `D[w] = w_xx` for linear dispersal and `D[w] = w·w_xx` for nonlinear
//! dispersal; the conservative alternative `(w w_x)_x` is available through
//! [`NonlinearForm::Divergence`]. The interval is split at `L₁` into a patch
//! with an Allee effect (`[0, L₁]`) and a patch without one (`[L₁, L]`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, OdeSystem, Options, Outcome, StepControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispersalKind {
    Linear,
    Nonlinear,
}

/// Discretisation of the nonlinear dispersal operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearForm {
    /// `w·w_xx`, evaluated pointwise.
    #[default]
    Literal,
    /// `(w w_x)_x` with face fluxes `δ·(wᵢ+wᵢ₊₁)/2·(wᵢ₊₁-wᵢ)/dx`.
    Divergence,
}

/// Reaction coefficients of one patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchCoefficients {
    pub m: f64,
    pub e: f64,
    pub h: f64,
    pub s: f64,
}

/// All eight coefficient functions evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteCoefficients {
    pub m: f64,
    pub m1: f64,
    pub e: f64,
    pub e1: f64,
    pub h: f64,
    pub h1: f64,
    pub s: f64,
    pub s1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CoefficientProfile {
    /// Piecewise constant with the patch identities: `m₁ = m`, `e₁ = e`,
    /// `h₁ = h`, `s₁ = 1` on the Allee patch, and `m₁ = 0`, `e₁ = 0`,
    /// `h₁ = 1`, `s₁ = s` on the free patch.
    Patches {
        allee: PatchCoefficients,
        free: PatchCoefficients,
    },
    /// The same eight values everywhere; no identities imposed.
    Uniform(SiteCoefficients),
}

impl Default for CoefficientProfile {
    fn default() -> Self {
        CoefficientProfile::Patches {
            allee: PatchCoefficients {
                m: 0.7,
                e: 0.04,
                h: 0.9,
                s: 0.9,
            },
            free: PatchCoefficients {
                m: 0.0,
                e: 0.0,
                h: 1.0,
                s: 0.9,
            },
        }
    }
}

impl CoefficientProfile {
    pub fn at(&self, in_allee_patch: bool) -> SiteCoefficients {
        match *self {
            CoefficientProfile::Uniform(c) => c,
            CoefficientProfile::Patches { allee, free } => {
                let c = if in_allee_patch { allee } else { free };
                if in_allee_patch {
                    SiteCoefficients {
                        m: c.m,
                        m1: c.m,
                        e: c.e,
                        e1: c.e,
                        h: c.h,
                        h1: c.h,
                        s: c.s,
                        s1: 1.0,
                    }
                } else {
                    SiteCoefficients {
                        m: c.m,
                        m1: 0.0,
                        e: c.e,
                        e1: 0.0,
                        h: c.h,
                        h1: 1.0,
                        s: c.s,
                        s1: c.s,
                    }
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let sites = [self.at(true), self.at(false)];
        for c in sites {
            let all = [c.m, c.m1, c.e, c.e1, c.h, c.h1, c.s, c.s1];
            if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Domain(format!(
                    "coefficients must be finite and nonnegative: {c:?}"
                )));
            }
            if c.h <= 0.0 || c.h1 <= 0.0 || c.s <= 0.0 || c.s1 <= 0.0 {
                return Err(Error::Domain(format!(
                    "h, h1, s and s1 must be positive so that C1 > 0: {c:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Initial profiles `(u₀, v₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InitialData {
    /// `(a_u + x², a_v + x²)`.
    Quadratic { u_offset: f64, v_offset: f64 },
    /// `floor + Σ wₖ exp(-((x-cₖ)/√width)²)` for both components.
    Gaussians {
        centers: Vec<f64>,
        weights: Vec<f64>,
        width: f64,
        floor: f64,
    },
    Flat { u: f64, v: f64 },
    /// Values at the cell centres.
    Samples { u: Vec<f64>, v: Vec<f64> },
}

impl InitialData {
    pub fn double_gaussian(first_center: f64, second_weight: f64, floor: f64) -> Self {
        InitialData::Gaussians {
            centers: vec![first_center, 0.4],
            weights: vec![1.0, second_weight],
            width: 0.008,
            floor,
        }
    }

    fn sample(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (u, v) = match self {
            InitialData::Quadratic { u_offset, v_offset } => (
                x.iter().map(|x| u_offset + x * x).collect(),
                x.iter().map(|x| v_offset + x * x).collect(),
            ),
            InitialData::Gaussians {
                centers,
                weights,
                width,
                floor,
            } => {
                if centers.len() != weights.len() || width.is_nan() || *width <= 0.0 {
                    return Err(Error::Domain(
                        "Gaussian initial data needs matching centers/weights and width > 0".into(),
                    ));
                }
                let root = width.sqrt();
                let w: Vec<f64> = x
                    .iter()
                    .map(|&x| {
                        floor
                            + centers
                                .iter()
                                .zip(weights)
                                .map(|(c, k)| k * (-((x - c) / root).powi(2)).exp())
                                .sum::<f64>()
                    })
                    .collect();
                (w.clone(), w)
            }
            InitialData::Flat { u, v } => (vec![*u; x.len()], vec![*v; x.len()]),
            InitialData::Samples { u, v } => {
                if u.len() != x.len() || v.len() != x.len() {
                    return Err(Error::Domain(format!(
                        "initial samples have lengths {} and {}, grid has {} cells",
                        u.len(),
                        v.len(),
                        x.len()
                    )));
                }
                (u.clone(), v.clone())
            }
        };
        if u.iter().chain(&v).any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("initial data must be finite and nonnegative".into()));
        }
        Ok((u, v))
    }
}

fn default_length() -> f64 {
    std::f64::consts::PI
}
fn default_cells() -> usize {
    100
}
fn default_t_end() -> f64 {
    50.0
}
fn default_tol() -> f64 {
    1e-6
}
fn default_snapshot_every() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    #[serde(default = "default_length")]
    pub length: f64,
    /// Right end of the Allee patch; defaults to `length / 2`.
    #[serde(default)]
    pub patch_boundary: Option<f64>,
    #[serde(default = "default_cells")]
    pub cells: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub kind: DispersalKind,
    #[serde(default)]
    pub form: NonlinearForm,
    #[serde(default)]
    pub profile: CoefficientProfile,
    pub initial: InitialData,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: f64,
}

impl PdeConfig {
    pub fn new(kind: DispersalKind, delta1: f64, delta2: f64, initial: InitialData) -> Self {
        Self {
            length: default_length(),
            patch_boundary: None,
            cells: default_cells(),
            delta1,
            delta2,
            kind,
            form: NonlinearForm::default(),
            profile: CoefficientProfile::default(),
            initial,
            t_end: default_t_end(),
            tol: default_tol(),
            snapshot_every: default_snapshot_every(),
        }
    }

    pub fn patch_boundary(&self) -> f64 {
        self.patch_boundary.unwrap_or(0.5 * self.length)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |param: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation {
                    param,
                    bound: "finite and > 0",
                    value,
                })
            }
        };
        positive("length", self.length)?;
        positive("delta1", self.delta1)?;
        positive("delta2", self.delta2)?;
        positive("t_end", self.t_end)?;
        positive("snapshot_every", self.snapshot_every)?;
        let l1 = self.patch_boundary();
        if !(l1 > 0.0 && l1 < self.length) {
            return Err(Error::Validation {
                param: "patch_boundary",
                bound: "0 < L1 < L",
                value: l1,
            });
        }
        if self.cells < 4 {
            return Err(Error::Validation {
                param: "cells",
                bound: "N >= 4",
                value: self.cells as f64,
            });
        }
        if !(1e-12..=1e-2).contains(&self.tol) {
            return Err(Error::Validation {
                param: "tol",
                bound: "1e-12 <= tol <= 1e-2",
                value: self.tol,
            });
        }
        self.profile.validate()
    }
}

/// Grid, sampled coefficients and initial state of a configured problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedProblem {
    pub config: PdeConfig,
    pub dx: f64,
    /// Cell centres.
    pub x: Vec<f64>,
    /// Number of cells in the Allee patch.
    pub allee_cells: usize,
    /// `L₁` after snapping to the nearest cell edge.
    pub patch_boundary: f64,
    pub coefficients: Vec<SiteCoefficients>,
    /// `0.5 · min(h, h₁, s, s₁)` over the grid.
    pub c1: f64,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn build_pde_problem(config: &PdeConfig) -> Result<DiscretizedProblem> {
    config.validate()?;
    let n = config.cells;
    let dx = config.length / n as f64;
    let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dx).collect();
    let requested = config.patch_boundary();
    let allee_cells = ((requested / dx).round() as usize).clamp(1, n - 1);
    let snapped = allee_cells as f64 * dx;
    let mut warnings = Vec::new();
    if (snapped - requested).abs() > 1e-12 * config.length {
        warnings.push(format!(
            "patch boundary {requested} is not a cell edge; snapped to {snapped}"
        ));
    }
    let coefficients: Vec<SiteCoefficients> =
        (0..n).map(|i| config.profile.at(i < allee_cells)).collect();
    let c1 = 0.5
        * coefficients
            .iter()
            .map(|c| c.h.min(c.h1).min(c.s).min(c.s1))
            .fold(f64::INFINITY, f64::min);
    let (u0, v0) = config.initial.sample(&x)?;
    Ok(DiscretizedProblem {
        config: config.clone(),
        dx,
        x,
        allee_cells,
        patch_boundary: snapped,
        coefficients,
        c1,
        u0,
        v0,
        warnings,
    })
}

/// `w²/(m+w)`, with `0` when both `m` and `w` vanish.
#[inline]
fn allee_gain(m: f64, w: f64) -> f64 {
    let den = m + w;
    if den > 0.0 {
        w * w / den
    } else {
        0.0
    }
}

impl DiscretizedProblem {
    pub fn cells(&self) -> usize {
        self.x.len()
    }

    /// Central second difference with mirrored ghost cells.
    pub fn laplacian(&self, w: &[f64], out: &mut [f64]) {
        let n = w.len();
        let inv = 1.0 / (self.dx * self.dx);
        for i in 0..n {
            let left = if i == 0 { w[0] } else { w[i - 1] };
            let right = if i + 1 == n { w[n - 1] } else { w[i + 1] };
            out[i] = (left - 2.0 * w[i] + right) * inv;
        }
    }

    /// Face fluxes `-(w w_x)` at the `N+1` cell faces; the two boundary
    /// faces are zero.
    pub fn divergence_fluxes(&self, w: &[f64]) -> Vec<f64> {
        let n = w.len();
        let mut flux = vec![0.0; n + 1];
        for i in 0..n - 1 {
            flux[i + 1] = 0.5 * (w[i] + w[i + 1]) * (w[i + 1] - w[i]) / self.dx;
        }
        flux
    }

    fn dispersal(&self, delta: f64, w: &[f64], out: &mut [f64]) {
        match (self.config.kind, self.config.form) {
            (DispersalKind::Linear, _) => {
                self.laplacian(w, out);
                out.iter_mut().for_each(|o| *o *= delta);
            }
            (DispersalKind::Nonlinear, NonlinearForm::Literal) => {
                self.laplacian(w, out);
                out.iter_mut().zip(w).for_each(|(o, wi)| *o *= delta * wi);
            }
            (DispersalKind::Nonlinear, NonlinearForm::Divergence) => {
                let flux = self.divergence_fluxes(w);
                for i in 0..w.len() {
                    out[i] = delta * (flux[i + 1] - flux[i]) / self.dx;
                }
            }
        }
    }

    /// Reaction terms `(Rᵤ, Rᵥ)` at cell `i`.
    pub fn reaction(&self, i: usize, u: f64, v: f64) -> (f64, f64) {
        let c = &self.coefficients[i];
        (
            c.s1 * (allee_gain(c.m, u) - c.e * u - c.h * u * u),
            c.s * (allee_gain(c.m1, v) - c.e1 * v - c.h1 * v * v),
        )
    }

    /// Semi-discrete right-hand side for the stacked state `[u..., v...]`.
    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.cells();
        let (u, v) = y.split_at(n);
        let (du, dv) = dy.split_at_mut(n);
        self.dispersal(self.config.delta1, u, du);
        self.dispersal(self.config.delta2, v, dv);
        for i in 0..n {
            let (ru, rv) = self.reaction(i, u[i], v[i]);
            du[i] += ru;
            dv[i] += rv;
        }
    }

    /// Largest explicit step, `0.4·dx²/δ_eff`, where `δ_eff` is `δ` for
    /// linear dispersal and `δ·max w` for nonlinear dispersal.
    pub fn step_ceiling(&self, y: &[f64]) -> f64 {
        let n = self.cells();
        let (u, v) = y.split_at(n);
        let scale = |w: &[f64]| match self.config.kind {
            DispersalKind::Linear => 1.0,
            DispersalKind::Nonlinear => w.iter().fold(0.0f64, |a, &b| a.max(b)),
        };
        let eff = (self.config.delta1 * scale(u)).max(self.config.delta2 * scale(v));
        if eff > 0.0 {
            0.4 * self.dx * self.dx / eff
        } else {
            f64::INFINITY
        }
    }
}

impl OdeSystem for DiscretizedProblem {
    fn dim(&self) -> usize {
        2 * self.cells()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        DiscretizedProblem::rhs(self, y, dy);
    }

    fn max_step(&self, y: &[f64]) -> f64 {
        self.step_ceiling(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    U,
    V,
}

/// Why and where a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeFailure {
    pub t: f64,
    /// Cell whose scaled rate of change is largest at the failure.
    pub cell: usize,
    pub component: Component,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeSeries {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub failure: Option<PdeFailure>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl PdeSeries {
    pub fn last_u(&self) -> &[f64] {
        self.u.last().expect("series holds the initial snapshot")
    }

    pub fn last_v(&self) -> &[f64] {
        self.v.last().expect("series holds the initial snapshot")
    }
}

fn snapshot_times(t_end: f64, every: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut k = 1usize;
    loop {
        let t = k as f64 * every;
        if t >= t_end * (1.0 - 1e-12) {
            break;
        }
        out.push(t);
        k += 1;
    }
    out.push(t_end);
    out
}

fn locate_failure(prob: &DiscretizedProblem, y: &[f64], tol: f64) -> (usize, Component) {
    let mut dy = vec![0.0; y.len()];
    prob.rhs(y, &mut dy);
    let n = prob.cells();
    let (k, _) = dy
        .iter()
        .zip(y)
        .map(|(d, w)| (d / (tol + tol * w.abs())).abs())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, s)| {
            if s > best.1 {
                (k, s)
            } else {
                best
            }
        });
    if k < n {
        (k, Component::U)
    } else {
        (k - n, Component::V)
    }
}

/// Integrates the discretised system to `t_end`, recording snapshots every
/// `config.snapshot_every` time units and at `t_end`. Negative proposals
/// are rejected, so every stored value is nonnegative.
pub fn integrate_pde(prob: &DiscretizedProblem, t_end: f64, tol: f64) -> Result<PdeSeries> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Validation {
            param: "t_end",
            bound: "finite and > 0",
            value: t_end,
        });
    }
    if !(1e-12..=1e-2).contains(&tol) {
        return Err(Error::Validation {
            param: "tol",
            bound: "1e-12 <= tol <= 1e-2",
            value: tol,
        });
    }
    let n = prob.cells();
    let mut y: Vec<f64> = prob.u0.iter().chain(&prob.v0).copied().collect();
    let times = snapshot_times(t_end, prob.config.snapshot_every);
    let mut series = PdeSeries {
        x: prob.x.clone(),
        times: vec![0.0],
        u: vec![prob.u0.clone()],
        v: vec![prob.v0.clone()],
        failure: None,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut next_step = None;
    for w in times.windows(2) {
        let opts = Options {
            nonnegative: true,
            initial_step: next_step,
            ..Options::with_tol(tol)
        };
        let sol = integrate(prob, w[0], &y, w[1], &opts, |_, _| StepControl::Continue);
        series.accepted_steps += sol.stats.accepted;
        series.rejected_steps += sol.stats.rejected;
        y = sol.y;
        if let Outcome::StepFailure { reason } = sol.outcome {
            let (cell, component) = locate_failure(prob, &y, tol);
            series.failure = Some(PdeFailure {
                t: sol.t,
                cell,
                component,
                reason,
            });
            break;
        }
        next_step = Some(sol.next_step).filter(|h| h.is_finite() && *h > 0.0);
        series.times.push(w[1]);
        series.u.push(y[..n].to_vec());
        series.v.push(y[n..].to_vec());
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRow {
    pub t: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    /// `∫ log u dx`; absent when some `u` is not positive.
    pub logmass_u: Option<f64>,
    /// `d/dt ∫ log u + ∫ s₁ h u - ∫ s₁ (1-e)`, with the time derivative
    /// taken from the semi-discrete right-hand side.
    pub gronwall_monitor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub rows: Vec<FunctionalRow>,
    /// `max(‖u₀‖∞, max over x of (1-e)/h)`.
    pub comparison_bound: f64,
}

/// Monitoring functionals at every snapshot. For nonlinear dispersal the
/// log-mass and Gronwall monitor are required, so a nonpositive `u` is a
/// domain error; for linear dispersal they are simply omitted.
pub fn pde_functionals(series: &PdeSeries, prob: &DiscretizedProblem) -> Result<Functionals> {
    let n = prob.cells();
    let dx = prob.dx;
    let mut rows = Vec::with_capacity(series.times.len());
    let mut dy = vec![0.0; 2 * n];
    let mut y = vec![0.0; 2 * n];
    for ((&t, u), v) in series.times.iter().zip(&series.u).zip(&series.v) {
        let (min_u, max_u) = min_max(u);
        let (min_v, max_v) = min_max(v);
        let positive = u.iter().all(|&w| w > 0.0);
        if !positive && prob.config.kind == DispersalKind::Nonlinear {
            let cell = u.iter().position(|&w| w <= 0.0).unwrap_or(0);
            return Err(Error::Domain(format!(
                "log-mass needs u > 0, but u = {} at cell {cell}, t = {t}",
                u[cell]
            )));
        }
        let (logmass_u, gronwall_monitor) = if positive {
            y[..n].copy_from_slice(u);
            y[n..].copy_from_slice(v);
            prob.rhs(&y, &mut dy);
            let mut dlog = 0.0;
            let mut absorb = 0.0;
            let mut supply = 0.0;
            let mut logmass = 0.0;
            for i in 0..n {
                let c = &prob.coefficients[i];
                logmass += u[i].ln();
                dlog += dy[i] / u[i];
                absorb += c.s1 * c.h * u[i];
                supply += c.s1 * (1.0 - c.e);
            }
            (Some(logmass * dx), Some((dlog + absorb - supply) * dx))
        } else {
            (None, None)
        };
        rows.push(FunctionalRow {
            t,
            min_u,
            max_u,
            min_v,
            max_v,
            mass_u: u.iter().sum::<f64>() * dx,
            mass_v: v.iter().sum::<f64>() * dx,
            logmass_u,
            gronwall_monitor,
        });
    }
    let logistic = prob
        .coefficients
        .iter()
        .map(|c| (1.0 - c.e) / c.h)
        .fold(f64::NEG_INFINITY, f64::max);
    let u0_sup = prob.u0.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(Functionals {
        rows,
        comparison_bound: u0_sup.max(logistic),
    })
}

fn min_max(w: &[f64]) -> (f64, f64) {
    w.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}
