//! Trajectories of the two ODE models, phase-portrait data and basin maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{all_equilibria, linear_equilibria, Equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::integrate::{integrate, OdeSystem, Options, Outcome, StepControl};
use crate::model::{Model, OdeParams, State};

/// Horizon used when no end time is given.
pub const DEFAULT_HORIZON: f64 = 2000.0;

/// Early termination needs the right-hand side below `100·tol` clamped to
/// this range...
const CONVERGED_RHS: (f64, f64) = (1e-12, 1e-9);
/// ...and the state this close to a known equilibrium.
const CONVERGED_DIST: f64 = 1e-8;

struct PlanarSystem<'a> {
    model: Model,
    p: &'a OdeParams,
}

impl OdeSystem for PlanarSystem<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let f = self.model.rhs(self.p, State::new(y[0], y[1]));
        dy[0] = f.u;
        dy[1] = f.v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Terminal {
    /// The requested end time was reached.
    Reached,
    /// Stopped early at a known equilibrium.
    Converged { equilibrium: EquilibriumKind },
    StepFailure { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub model: Model,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub terminal: Terminal,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        *self.states.last().expect("a trajectory holds at least its initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a trajectory holds at least its initial time")
    }
}

/// Equilibria of `model` at `p`, used as convergence targets.
pub fn known_equilibria(model: Model, p: &OdeParams) -> Vec<Equilibrium> {
    match model {
        Model::Nonlinear => all_equilibria(p),
        Model::Linear => linear_equilibria(p).map(|a| a.equilibria).unwrap_or_default(),
    }
}

fn check_inputs(model: Model, p: &OdeParams, x0: State, t_end: f64, tol: f64) -> Result<()> {
    p.validate(model.validation())?;
    for (param, value) in [("u0", x0.u), ("v0", x0.v)] {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Validation {
                param,
                bound: "finite and >= 0",
                value,
            });
        }
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Validation {
            param: "t_end",
            bound: "finite and > 0",
            value: t_end,
        });
    }
    if !(1e-12..=1e-3).contains(&tol) {
        return Err(Error::Validation {
            param: "tol",
            bound: "1e-12 <= tol <= 1e-3",
            value: tol,
        });
    }
    Ok(())
}

fn run(
    model: Model,
    p: &OdeParams,
    x0: State,
    t_end: f64,
    tol: f64,
    targets: &[Equilibrium],
) -> Trajectory {
    let sys = PlanarSystem { model, p };
    let opts = Options {
        nonnegative: true,
        ..Options::with_tol(tol)
    };
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut reached = None;
    // Near a stable equilibrium the step controller pushes the step to the
    // stability limit and the state then oscillates with an amplitude of
    // order `tol`, so a fixed 1e-12 would never trigger.
    let rhs_floor = (100.0 * tol).clamp(CONVERGED_RHS.0, CONVERGED_RHS.1);
    let sol = integrate(&sys, 0.0, &[x0.u, x0.v], t_end, &opts, |t, y| {
        let x = State::new(y[0], y[1]);
        times.push(t);
        states.push(x);
        if model.rhs(p, x).norm() < rhs_floor {
            if let Some(eq) = targets.iter().find(|e| e.state.dist(x) < CONVERGED_DIST) {
                reached = Some(eq.kind);
                return StepControl::Stop;
            }
        }
        StepControl::Continue
    });
    let terminal = match (sol.outcome, reached) {
        (Outcome::Stopped, Some(equilibrium)) => Terminal::Converged { equilibrium },
        (Outcome::StepFailure { reason }, _) => Terminal::StepFailure { reason },
        _ => Terminal::Reached,
    };
    Trajectory {
        model,
        times,
        states,
        terminal,
    }
}

/// Integrates `model` from `x0` up to `t_end` with local error tolerance
/// `tol` (used as both relative and absolute tolerance).
///
/// Steps that would leave the nonnegative quadrant are rejected and
/// retried with half the step. The integration stops early once the
/// trajectory is within `1e-8` of a known equilibrium and the right-hand
/// side is below `100·tol` clamped to `[1e-12, 1e-9]`.
pub fn integrate_ode(model: Model, p: &OdeParams, x0: State, t_end: f64, tol: f64) -> Result<Trajectory> {
    check_inputs(model, p, x0, t_end, tol)?;
    Ok(run(model, p, x0, t_end, tol, &known_equilibria(model, p)))
}

/// A rectangular grid of initial conditions or field sample points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub nu: usize,
    pub nv: usize,
}

impl GridSpec {
    pub fn new(u_range: (f64, f64), v_range: (f64, f64), nu: usize, nv: usize) -> Result<Self> {
        let g = Self {
            u_min: u_range.0,
            u_max: u_range.1,
            v_min: v_range.0,
            v_max: v_range.1,
            nu,
            nv,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.u_min, self.u_max, self.v_min, self.v_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.u_min < 0.0 || self.v_min < 0.0 {
            return Err(Error::Domain(format!(
                "grid bounds must be finite and nonnegative: u in [{}, {}], v in [{}, {}]",
                self.u_min, self.u_max, self.v_min, self.v_max
            )));
        }
        if self.u_max <= self.u_min {
            return Err(Error::Validation {
                param: "u_max",
                bound: "u_max > u_min",
                value: self.u_max,
            });
        }
        if self.v_max <= self.v_min {
            return Err(Error::Validation {
                param: "v_max",
                bound: "v_max > v_min",
                value: self.v_max,
            });
        }
        if self.nu < 2 || self.nv < 2 {
            return Err(Error::Validation {
                param: "grid counts",
                bound: ">= 2 per axis",
                value: self.nu.min(self.nv) as f64,
            });
        }
        Ok(())
    }

    /// Grid nodes, `u` varying fastest.
    pub fn nodes(&self) -> Vec<State> {
        let mut out = Vec::with_capacity(self.nu * self.nv);
        for j in 0..self.nv {
            let v = lerp(self.v_min, self.v_max, j, self.nv);
            for i in 0..self.nu {
                out.push(State::new(lerp(self.u_min, self.u_max, i, self.nu), v));
            }
        }
        out
    }
}

fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: State,
    pub f: State,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitData {
    pub field: Vec<FieldSample>,
    pub equilibria: Vec<Equilibrium>,
    pub seeds: Vec<State>,
    pub trajectories: Vec<Trajectory>,
}

/// Sixteen points spaced evenly along the perimeter of the grid box, plus
/// four points offset diagonally around each equilibrium that is not
/// stable.
pub fn portrait_seeds(g: &GridSpec, equilibria: &[Equilibrium]) -> Vec<State> {
    let w = g.u_max - g.u_min;
    let hgt = g.v_max - g.v_min;
    let perimeter = 2.0 * (w + hgt);
    let mut seeds: Vec<State> = (0..16)
        .map(|k| {
            let s = perimeter * k as f64 / 16.0;
            if s < w {
                State::new(g.u_min + s, g.v_min)
            } else if s < w + hgt {
                State::new(g.u_max, g.v_min + (s - w))
            } else if s < 2.0 * w + hgt {
                State::new(g.u_max - (s - w - hgt), g.v_max)
            } else {
                State::new(g.u_min, g.v_max - (s - 2.0 * w - hgt))
            }
        })
        .collect();
    let eps = 0.01 * w.min(hgt);
    for eq in equilibria.iter().filter(|e| !e.stability.is_stable()) {
        for (du, dv) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            seeds.push(State::new(
                (eq.state.u + du * eps).max(0.0),
                (eq.state.v + dv * eps).max(0.0),
            ));
        }
    }
    seeds
}

/// Field samples on the grid nodes, the equilibria, and trajectories from
/// [`portrait_seeds`] integrated to `t_end` at tolerance `1e-8`.
pub fn phase_portrait(model: Model, p: &OdeParams, g: &GridSpec, t_end: f64) -> Result<PortraitData> {
    g.validate()?;
    check_inputs(model, p, State::new(0.0, 0.0), t_end, 1e-8)?;
    let field = g
        .nodes()
        .into_iter()
        .map(|x| FieldSample {
            x,
            f: model.rhs(p, x),
        })
        .collect();
    let equilibria = known_equilibria(model, p);
    let seeds = portrait_seeds(g, &equilibria);
    let trajectories = seeds
        .par_iter()
        .map(|&x0| run(model, p, x0, t_end, 1e-8, &equilibria))
        .collect();
    Ok(PortraitData {
        field,
        equilibria,
        seeds,
        trajectories,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasinLabel {
    Attractor(EquilibriumKind),
    Unresolved,
}

impl BasinLabel {
    pub fn name(self) -> &'static str {
        match self {
            BasinLabel::Attractor(kind) => kind.name(),
            BasinLabel::Unresolved => "Unresolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinCell {
    pub x0: State,
    pub label: BasinLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinMap {
    pub grid: GridSpec,
    pub cells: Vec<BasinCell>,
}

impl BasinMap {
    pub fn count(&self, label: BasinLabel) -> usize {
        self.cells.iter().filter(|c| c.label == label).count()
    }
}

/// Labels each grid node by the equilibrium its trajectory ends within
/// `tol` of by time `t_end`, or [`BasinLabel::Unresolved`].
pub fn basin_map(model: Model, p: &OdeParams, g: &GridSpec, tol: f64, t_end: f64) -> Result<BasinMap> {
    g.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Validation {
            param: "tol",
            bound: "finite and > 0",
            value: tol,
        });
    }
    let integration_tol = (tol * 1e-2).clamp(1e-12, 1e-8);
    check_inputs(model, p, State::new(0.0, 0.0), t_end, integration_tol)?;
    let equilibria = known_equilibria(model, p);
    let cells = g
        .nodes()
        .into_par_iter()
        .map(|x0| {
            let traj = run(model, p, x0, t_end, integration_tol, &equilibria);
            let end = traj.final_state();
            let label = equilibria
                .iter()
                .map(|e| (e.state.dist(end), e.kind))
                .filter(|(d, _)| *d <= tol)
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map_or(BasinLabel::Unresolved, |(_, kind)| BasinLabel::Attractor(kind));
            BasinCell { x0, label }
        })
        .collect();
    Ok(BasinMap { grid: *g, cells })
}
