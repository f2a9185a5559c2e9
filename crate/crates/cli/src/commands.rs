//! One function per subcommand. Each turns a resolved [`Scenario`] into
//! tables and a JSON summary; nothing here touches the file system.

use std::collections::BTreeMap;

use patchdyn::bifurcation::{abundance_sensitivity, sweep_allee, SensitivityReport};
use patchdyn::equilibria::{
    all_equilibria, derived_thresholds, linear_equilibria, regime_report, Equilibrium,
};
use patchdyn::ode_sim::{basin_map, integrate_ode, phase_portrait, GridSpec, Terminal};
use patchdyn::pde::{build_pde_problem, integrate_pde, pde_functionals};
use patchdyn::{Model, OdeParams, State};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::presets::PRESETS;
use crate::scenario::Scenario;
use crate::table::{Cell, Table};

pub struct Report {
    pub summary: Value,
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
    /// Set when the run completed but a numerical stage gave up; the
    /// outputs are still written and the exit status is nonzero.
    pub failure: Option<String>,
}

impl Report {
    fn new(summary: Value, tables: Vec<Table>) -> Self {
        Self {
            summary,
            tables,
            warnings: Vec::new(),
            failure: None,
        }
    }
}

pub const DEFAULT_GRID: GridSpec = GridSpec {
    u_min: 0.0,
    u_max: 2.0,
    v_min: 0.0,
    v_max: 2.0,
    nu: 21,
    nv: 21,
};

fn columns<'a>(family: Option<&'a str>, rest: &[&'a str]) -> Vec<&'a str> {
    family.into_iter().chain(rest.iter().copied()).collect()
}

fn with_family(value: Option<f64>, rest: Vec<Cell>) -> Vec<Cell> {
    value.map(Cell::Num).into_iter().chain(rest).collect()
}

fn equilibrium_json(eq: &Equilibrium) -> Value {
    json!({
        "kind": eq.kind.name(),
        "u": eq.state.u,
        "v": eq.state.v,
        "stability": eq.stability.name(),
    })
}

/// One summary entry per run, flattened when there is a single run.
fn collect_runs(runs: Vec<Value>) -> Value {
    if runs.len() == 1 {
        runs.into_iter().next().expect("length checked")
    } else {
        json!({ "runs": runs })
    }
}

fn equilibria_of(model: Model, p: &OdeParams) -> Result<Vec<Equilibrium>, CliError> {
    Ok(match model {
        Model::Nonlinear => all_equilibria(p),
        Model::Linear => linear_equilibria(p)?.equilibria,
    })
}

pub fn equilibria(sc: &Scenario) -> Result<Report, CliError> {
    let (model, members) = sc.ode_members()?;
    let fam = sc.family_column();
    let mut table = Table::new(
        "equilibria",
        &columns(
            fam,
            &["kind", "u", "v", "stability", "degenerate", "re1", "im1", "re2", "im2"],
        ),
    );
    let mut runs = Vec::new();
    for (value, p) in members {
        let eqs = equilibria_of(model, &p)?;
        for eq in &eqs {
            let [l1, l2] = eq.eigenvalues;
            table.push(with_family(
                value,
                vec![
                    eq.kind.name().into(),
                    eq.state.u.into(),
                    eq.state.v.into(),
                    eq.stability.name().into(),
                    eq.degenerate.into(),
                    l1.re.into(),
                    l1.im.into(),
                    l2.re.into(),
                    l2.im.into(),
                ],
            ));
        }
        let mut run = json!({
            "count": eqs.len(),
            "equilibria": eqs.iter().map(equilibrium_json).collect::<Vec<_>>(),
        });
        if let (Some(col), Some(x)) = (fam, value) {
            run[col] = json!(x);
        }
        runs.push(run);
    }
    Ok(Report::new(collect_runs(runs), vec![table]))
}

pub fn regime(sc: &Scenario) -> Result<Report, CliError> {
    let (model, members) = sc.ode_members()?;
    let fam = sc.family_column();
    let mut runs = Vec::new();
    let mut table = match model {
        Model::Nonlinear => Table::new(
            "regime",
            &columns(fam, &["case", "verdict", "B", "m0", "m1", "mstar", "m1star"]),
        ),
        Model::Linear => Table::new("regime", &columns(fam, &["regime", "verdict"])),
    };
    for (value, p) in members {
        let mut run = match model {
            Model::Nonlinear => {
                let r = regime_report(&p)?;
                let d = r.derived;
                let opt = |x: Option<f64>| x.map_or(Cell::Text(String::new()), Cell::Num);
                table.push(with_family(
                    value,
                    vec![
                        r.case.label().into(),
                        r.verdict.name().into(),
                        d.b.into(),
                        d.m0.into(),
                        d.m1.into(),
                        opt(d.mstar),
                        opt(d.m1star),
                    ],
                ));
                json!({
                    "case": r.case.label(),
                    "verdict": r.verdict.name(),
                    "derived": d,
                    "equilibria": r.equilibria.iter().map(equilibrium_json).collect::<Vec<_>>(),
                })
            }
            Model::Linear => {
                let a = linear_equilibria(&p)?;
                let regime = serde_json::to_value(a.regime)?;
                table.push(with_family(
                    value,
                    vec![
                        regime.as_str().unwrap_or_default().into(),
                        a.verdict.name().into(),
                    ],
                ));
                json!({
                    "regime": regime,
                    "verdict": a.verdict.name(),
                    "equilibria": a.equilibria.iter().map(equilibrium_json).collect::<Vec<_>>(),
                })
            }
        };
        if let (Some(col), Some(x)) = (fam, value) {
            run[col] = json!(x);
        }
        runs.push(run);
    }
    Ok(Report::new(collect_runs(runs), vec![table]))
}

fn nonlinear_only(sc: &Scenario, what: &str) -> Result<OdeParams, CliError> {
    let (model, p) = sc.single_ode()?;
    if model != Model::Nonlinear {
        return Err(CliError::Validation(format!("{what} is defined for the nonlinear model only")));
    }
    Ok(p)
}

pub const DEFAULT_M_RANGE: (f64, f64, usize) = (0.01, 2.0, 200);

pub fn sweep(sc: &Scenario) -> Result<Report, CliError> {
    let p = nonlinear_only(sc, "sweep")?;
    let o = &sc.options;
    let (lo, hi, steps) = (
        o.m_lo.unwrap_or(DEFAULT_M_RANGE.0),
        o.m_hi.unwrap_or(DEFAULT_M_RANGE.1),
        o.steps.unwrap_or(DEFAULT_M_RANGE.2),
    );
    let diagram = sweep_allee(&p, lo, hi, steps, o.include_boundary)?;
    let mut table = Table::new("sweep", &["m", "branch", "u", "v", "stability", "is_sn_marker"]);
    for r in &diagram.rows {
        table.push(vec![
            r.m.into(),
            r.branch.name().into(),
            r.u.into(),
            r.v.into(),
            r.stability.name().into(),
            r.is_sn_marker.into(),
        ]);
    }
    let markers: Vec<Value> = diagram
        .markers()
        .map(|r| json!({ "m": r.m, "branch": r.branch.name(), "u": r.u, "v": r.v }))
        .collect();
    let summary = json!({
        "rows": diagram.rows.len(),
        "markers": markers,
        "derived": derived_thresholds(&p),
    });
    Ok(Report::new(summary, vec![table]))
}

fn sensitivity_row(r: &SensitivityReport) -> Vec<Cell> {
    vec![
        r.m.into(),
        r.u1.into(),
        r.v1.into(),
        r.total.into(),
        r.c.into(),
        r.du1_dm.into(),
        r.dv1_dm.into(),
        r.dtotal_dm.into(),
    ]
}

pub fn sensitivity(sc: &Scenario) -> Result<Report, CliError> {
    let p = nonlinear_only(sc, "sensitivity")?;
    let o = &sc.options;
    let ms: Vec<f64> = match (o.m_lo, o.m_hi) {
        (None, None) => vec![p.m],
        (Some(lo), Some(hi)) => {
            let steps = o.steps.unwrap_or(50);
            if !(lo > 0.0 && hi > lo && steps >= 2) {
                return Err(CliError::Validation(
                    "sensitivity range needs 0 < m_lo < m_hi and steps >= 2".into(),
                ));
            }
            (0..steps)
                .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
                .collect()
        }
        _ => {
            return Err(CliError::Validation(
                "give both --m-lo and --m-hi, or neither".into(),
            ))
        }
    };
    let reports: Vec<SensitivityReport> = ms
        .iter()
        .map(|&m| abundance_sensitivity(&p, m))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(
        "sensitivity",
        &["m", "u1", "v1", "total", "c", "du1_dm", "dv1_dm", "dtotal_dm"],
    );
    for r in &reports {
        table.push(sensitivity_row(r));
    }
    let summary = if reports.len() == 1 {
        serde_json::to_value(reports[0])?
    } else {
        json!({ "rows": reports.len() })
    };
    Ok(Report::new(summary, vec![table]))
}

pub const DEFAULT_X0: (f64, f64) = (0.5, 0.5);
pub const DEFAULT_ODE_TOL: f64 = 1e-8;

fn terminal_json(t: &Terminal) -> Value {
    match t {
        Terminal::Reached => json!({ "event": "reached" }),
        Terminal::Converged { equilibrium } => {
            json!({ "event": "converged", "equilibrium": equilibrium.name() })
        }
        Terminal::StepFailure { reason } => json!({ "event": "step-failure", "reason": reason }),
    }
}

pub fn simulate_ode(sc: &Scenario) -> Result<Report, CliError> {
    let (model, members) = sc.ode_members()?;
    let o = &sc.options;
    let x0 = State::new(o.u0.unwrap_or(DEFAULT_X0.0), o.v0.unwrap_or(DEFAULT_X0.1));
    let t_end = o.t_end.unwrap_or(patchdyn::ode_sim::DEFAULT_HORIZON);
    let tol = o.tol.unwrap_or(DEFAULT_ODE_TOL);
    let fam = sc.family_column();
    let mut table = Table::new("trajectory", &columns(fam, &["t", "u", "v"]));
    let mut runs = Vec::new();
    let mut failure = None;
    for (value, p) in members {
        let traj = integrate_ode(model, &p, x0, t_end, tol)?;
        for (t, x) in traj.times.iter().zip(&traj.states) {
            table.push(with_family(value, vec![(*t).into(), x.u.into(), x.v.into()]));
        }
        if let Terminal::StepFailure { reason } = &traj.terminal {
            failure.get_or_insert_with(|| format!("step failure at t = {}: {reason}", traj.final_time()));
        }
        let end = traj.final_state();
        let mut run = json!({
            "terminal": terminal_json(&traj.terminal),
            "final_time": traj.final_time(),
            "final_state": { "u": end.u, "v": end.v },
            "points": traj.times.len(),
        });
        if let (Some(col), Some(x)) = (fam, value) {
            run[col] = json!(x);
        }
        runs.push(run);
    }
    let mut report = Report::new(collect_runs(runs), vec![table]);
    report.failure = failure;
    Ok(report)
}

pub const DEFAULT_BASIN_TOL: f64 = 1e-4;

pub fn basin(sc: &Scenario) -> Result<Report, CliError> {
    let (model, p) = sc.single_ode()?;
    let o = &sc.options;
    let grid = o.grid.unwrap_or(DEFAULT_GRID);
    let map = basin_map(
        model,
        &p,
        &grid,
        o.tol.unwrap_or(DEFAULT_BASIN_TOL),
        o.t_end.unwrap_or(patchdyn::ode_sim::DEFAULT_HORIZON),
    )?;
    let mut table = Table::new("basin", &["u0", "v0", "label"]);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &map.cells {
        table.push(vec![c.x0.u.into(), c.x0.v.into(), c.label.name().into()]);
        *counts.entry(c.label.name()).or_default() += 1;
    }
    Ok(Report::new(json!({ "cells": map.cells.len(), "counts": counts }), vec![table]))
}

pub fn portrait(sc: &Scenario) -> Result<Report, CliError> {
    let (model, p) = sc.single_ode()?;
    let o = &sc.options;
    let grid = o.grid.unwrap_or(DEFAULT_GRID);
    let data = phase_portrait(
        model,
        &p,
        &grid,
        o.t_end.unwrap_or(patchdyn::ode_sim::DEFAULT_HORIZON),
    )?;
    let mut field = Table::new("portrait", &["x_u", "x_v", "f_u", "f_v", "kind"]);
    for s in &data.field {
        field.push(vec![s.x.u.into(), s.x.v.into(), s.f.u.into(), s.f.v.into(), "field".into()]);
    }
    for eq in &data.equilibria {
        let f = model.rhs(&p, eq.state);
        field.push(vec![
            eq.state.u.into(),
            eq.state.v.into(),
            f.u.into(),
            f.v.into(),
            eq.kind.name().into(),
        ]);
    }
    let mut trajectories = Table::new("trajectories", &["seed", "t", "u", "v"]);
    let mut ends = Vec::new();
    for (k, traj) in data.trajectories.iter().enumerate() {
        for (t, x) in traj.times.iter().zip(&traj.states) {
            trajectories.push(vec![k.into(), (*t).into(), x.u.into(), x.v.into()]);
        }
        let end = traj.final_state();
        ends.push(json!({
            "seed": k,
            "x0": { "u": data.seeds[k].u, "v": data.seeds[k].v },
            "final_state": { "u": end.u, "v": end.v },
            "terminal": terminal_json(&traj.terminal),
        }));
    }
    let summary = json!({
        "equilibria": data.equilibria.iter().map(equilibrium_json).collect::<Vec<_>>(),
        "trajectories": ends,
    });
    Ok(Report::new(summary, vec![field, trajectories]))
}

pub fn simulate_pde(sc: &Scenario) -> Result<Report, CliError> {
    let cfg = sc.pde_config()?;
    let prob = build_pde_problem(cfg)?;
    let series = integrate_pde(&prob, cfg.t_end, cfg.tol)?;
    let functionals = pde_functionals(&series, &prob)?;

    let mut snapshots = Table::new("snapshots", &["t", "x", "u", "v"]);
    for ((t, u), v) in series.times.iter().zip(&series.u).zip(&series.v) {
        for ((x, ui), vi) in series.x.iter().zip(u).zip(v) {
            snapshots.push(vec![(*t).into(), (*x).into(), (*ui).into(), (*vi).into()]);
        }
    }
    let mut table = Table::new(
        "functionals",
        &[
            "t",
            "min_u",
            "max_u",
            "min_v",
            "max_v",
            "mass_u",
            "mass_v",
            "logmass_u",
            "gronwall_monitor",
        ],
    );
    let opt = |x: Option<f64>| x.map_or(Cell::Text(String::new()), Cell::Num);
    for r in &functionals.rows {
        table.push(vec![
            r.t.into(),
            r.min_u.into(),
            r.max_u.into(),
            r.min_v.into(),
            r.max_v.into(),
            r.mass_u.into(),
            r.mass_v.into(),
            opt(r.logmass_u),
            opt(r.gronwall_monitor),
        ]);
    }
    let last = functionals.rows.last().expect("series holds the initial snapshot");
    let summary = json!({
        "cells": prob.cells(),
        "dx": prob.dx,
        "patch_boundary": prob.patch_boundary,
        "c1": prob.c1,
        "snapshots": series.times.len(),
        "accepted_steps": series.accepted_steps,
        "rejected_steps": series.rejected_steps,
        "comparison_bound": functionals.comparison_bound,
        "final": last,
        "failure": series.failure,
    });
    let mut report = Report::new(summary, vec![snapshots, table]);
    report.warnings = prob.warnings.clone();
    report.failure = series.failure.as_ref().map(|f| {
        format!(
            "PDE integration stopped at t = {} (cell {}, {:?}): {}",
            f.t, f.cell, f.component, f.reason
        )
    });
    Ok(report)
}

pub fn presets_list() -> Report {
    let mut table = Table::new("presets", &["name", "command", "model", "description"]);
    let mut names = Vec::new();
    for p in PRESETS {
        let sc = crate::presets::preset(p.name).expect("listed presets exist");
        let model = serde_json::to_value(sc.model).expect("enum serialises");
        table.push(vec![
            p.name.into(),
            p.command.into(),
            model.as_str().unwrap_or_default().into(),
            p.description.into(),
        ]);
        names.push(p.name);
    }
    Report::new(json!({ "presets": names }), vec![table])
}
