//! Turning parsed flags into a [`Scenario`].

use patchdyn::ode_sim::{GridSpec, DEFAULT_HORIZON};
use patchdyn::pde::{DispersalKind, InitialData, NonlinearForm, PdeConfig};
use patchdyn::OdeParams;

use crate::args::{
    Command, Common, FormArg, FormatArg, GridCommand, InitialArg, KindArg, ModelArg, OdeCommand,
    ParamArgs, SimulateOdeCommand, SimulatePdeCommand, SweepCommand,
};
use crate::commands::{
    DEFAULT_BASIN_TOL, DEFAULT_GRID, DEFAULT_M_RANGE, DEFAULT_ODE_TOL, DEFAULT_X0,
};
use crate::error::CliError;
use crate::presets::preset;
use crate::scenario::{Format, ModelKind, Scenario};

/// Subcommand name and the scenario it should run.
pub fn resolve(command: &Command) -> Result<(&'static str, Scenario), CliError> {
    Ok(match command {
        Command::Equilibria(c) => ("equilibria", ode_scenario("equilibria", c)?),
        Command::Regime(c) => ("regime", ode_scenario("regime", c)?),
        Command::Sweep(c) => ("sweep", sweep_scenario("sweep", c)?),
        Command::Sensitivity(c) => ("sensitivity", sweep_scenario("sensitivity", c)?),
        Command::SimulateOde(c) => ("simulate-ode", simulate_ode_scenario(c)?),
        Command::Basin(c) => ("basin", grid_scenario("basin", c)?),
        Command::Portrait(c) => ("portrait", grid_scenario("portrait", c)?),
        Command::SimulatePde(c) => ("simulate-pde", simulate_pde_scenario(c)?),
        Command::Presets { .. } => unreachable!("presets are handled before resolution"),
    })
}

/// The preset or scenario file named in `common`, if any. `explicit` says
/// whether the command line also defines the model parameters.
fn load_base(command: &str, common: &Common, explicit: bool) -> Result<Option<Scenario>, CliError> {
    let base = match (&common.preset, &common.scenario) {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation(
                "--preset and --scenario cannot be combined".into(),
            ))
        }
        (Some(name), None) => {
            Some(preset(name).ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Validation(format!("cannot read scenario {}: {e}", path.display()))
            })?;
            let sc: Scenario = serde_json::from_str(&text).map_err(|e| {
                CliError::Validation(format!("invalid scenario {}: {e}", path.display()))
            })?;
            if let Some(c) = &sc.command {
                if c != command {
                    return Err(CliError::Validation(format!(
                        "scenario was written for `{c}`, not `{command}`"
                    )));
                }
            }
            Some(sc)
        }
        (None, None) => None,
    };
    if base.is_some() && explicit {
        return Err(CliError::Validation(
            "model parameters given both on the command line and by --preset/--scenario".into(),
        ));
    }
    Ok(base)
}

fn apply_common(sc: &mut Scenario, command: &str, common: &Common) {
    sc.command = Some(command.to_owned());
    if let Some(f) = common.format {
        sc.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(out) = &common.out {
        sc.out = Some(out.clone());
    }
    if common.gnuplot {
        sc.gnuplot = true;
    }
}

fn params_from_flags(p: &ParamArgs) -> Result<Scenario, CliError> {
    let need = |name: &str, x: Option<f64>| {
        x.ok_or_else(|| CliError::Usage(format!("missing --{name} (or use --preset/--scenario)")))
    };
    let params = OdeParams {
        m: need("m", p.m)?,
        e: need("e", p.e)?,
        h: need("h", p.h)?,
        delta: need("delta", p.delta)?,
        s: need("s", p.s)?,
    };
    let model = match p.model.unwrap_or(ModelArg::Nonlinear) {
        ModelArg::Nonlinear => ModelKind::NonlinearOde,
        ModelArg::Linear => ModelKind::LinearOde,
    };
    Ok(Scenario::ode(model, params))
}

fn ode_base(command: &str, common: &Common, params: &ParamArgs) -> Result<Scenario, CliError> {
    let mut sc = match load_base(command, common, params.any())? {
        Some(sc) => sc,
        None => params_from_flags(params)?,
    };
    apply_common(&mut sc, command, common);
    Ok(sc)
}

fn ode_scenario(command: &str, c: &OdeCommand) -> Result<Scenario, CliError> {
    ode_base(command, &c.common, &c.params)
}

fn sweep_scenario(command: &str, c: &SweepCommand) -> Result<Scenario, CliError> {
    let mut sc = ode_base(command, &c.common, &c.params)?;
    let o = &mut sc.options;
    o.m_lo = c.m_lo.or(o.m_lo);
    o.m_hi = c.m_hi.or(o.m_hi);
    o.steps = c.steps.or(o.steps);
    o.include_boundary |= c.boundary;
    if command == "sweep" {
        o.m_lo.get_or_insert(DEFAULT_M_RANGE.0);
        o.m_hi.get_or_insert(DEFAULT_M_RANGE.1);
        o.steps.get_or_insert(DEFAULT_M_RANGE.2);
    }
    Ok(sc)
}

fn simulate_ode_scenario(c: &SimulateOdeCommand) -> Result<Scenario, CliError> {
    let mut sc = ode_base("simulate-ode", &c.common, &c.params)?;
    let o = &mut sc.options;
    o.u0 = Some(c.u0.or(o.u0).unwrap_or(DEFAULT_X0.0));
    o.v0 = Some(c.v0.or(o.v0).unwrap_or(DEFAULT_X0.1));
    o.t_end = Some(c.t_end.or(o.t_end).unwrap_or(DEFAULT_HORIZON));
    o.tol = Some(c.tol.or(o.tol).unwrap_or(DEFAULT_ODE_TOL));
    Ok(sc)
}

fn grid_scenario(command: &str, c: &GridCommand) -> Result<Scenario, CliError> {
    let mut sc = ode_base(command, &c.common, &c.params)?;
    let o = &mut sc.options;
    let g = o.grid.unwrap_or(DEFAULT_GRID);
    o.grid = Some(GridSpec {
        u_min: c.u_min.unwrap_or(g.u_min),
        u_max: c.u_max.unwrap_or(g.u_max),
        v_min: c.v_min.unwrap_or(g.v_min),
        v_max: c.v_max.unwrap_or(g.v_max),
        nu: c.nu.unwrap_or(g.nu),
        nv: c.nv.unwrap_or(g.nv),
    });
    o.t_end = Some(c.t_end.or(o.t_end).unwrap_or(DEFAULT_HORIZON));
    if command == "basin" {
        o.tol = Some(c.tol.or(o.tol).unwrap_or(DEFAULT_BASIN_TOL));
    } else if c.tol.is_some() {
        return Err(CliError::Validation("portrait does not take --tol".into()));
    }
    Ok(sc)
}

fn simulate_pde_scenario(c: &SimulatePdeCommand) -> Result<Scenario, CliError> {
    let mut sc = match load_base("simulate-pde", &c.common, c.defines_problem())? {
        Some(sc) => sc,
        None => {
            let kind = match c.kind {
                Some(KindArg::Linear) => DispersalKind::Linear,
                Some(KindArg::Nonlinear) => DispersalKind::Nonlinear,
                None => return Err(CliError::Usage("missing --kind (or use --preset/--scenario)".into())),
            };
            let d1 = c
                .delta1
                .ok_or_else(|| CliError::Usage("missing --delta1".into()))?;
            let d2 = c
                .delta2
                .ok_or_else(|| CliError::Usage("missing --delta2".into()))?;
            let (a, b) = (c.u0.unwrap_or(5.0), c.v0.unwrap_or(5.0));
            let initial = match c.initial.unwrap_or(InitialArg::Flat) {
                InitialArg::Flat => InitialData::Flat { u: a, v: b },
                InitialArg::Quadratic => InitialData::Quadratic {
                    u_offset: a,
                    v_offset: b,
                },
            };
            let mut cfg = PdeConfig::new(kind, d1, d2, initial);
            if let Some(l) = c.length {
                cfg.length = l;
            }
            cfg.patch_boundary = c.patch_boundary;
            cfg.form = match c.form {
                Some(FormArg::Divergence) => NonlinearForm::Divergence,
                _ => NonlinearForm::Literal,
            };
            Scenario::pde(cfg)
        }
    };
    apply_common(&mut sc, "simulate-pde", &c.common);
    if let Some(cfg) = sc.pde.as_mut() {
        if let Some(n) = c.cells {
            cfg.cells = n;
        }
        if let Some(t) = c.t_end {
            cfg.t_end = t;
        }
        if let Some(t) = c.tol {
            cfg.tol = t;
        }
        if let Some(t) = c.snapshot_every {
            cfg.snapshot_every = t;
        }
    }
    Ok(sc)
}
