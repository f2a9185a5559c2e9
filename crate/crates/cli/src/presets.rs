//! Bundled parameter sets. Each preset records the subcommand it is meant
//! for and, in `notes`, which values are defaults chosen here.

use patchdyn::ode_sim::GridSpec;
use patchdyn::pde::{
    CoefficientProfile, DispersalKind, InitialData, PatchCoefficients, PdeConfig,
};
use patchdyn::OdeParams;

use crate::scenario::{Family, FamilyParameter, ModelKind, Scenario};

pub struct Preset {
    pub name: &'static str,
    pub command: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "fig1a", command: "portrait", description: "phase portrait, e < B" },
    Preset { name: "fig1b", command: "portrait", description: "phase portrait, e = B, m > 1/(h+B)" },
    Preset { name: "fig1c", command: "portrait", description: "phase portrait, e = B, m = 1/(h+B)" },
    Preset { name: "fig1d", command: "portrait", description: "phase portrait, e = B, m < 1/(h+B)" },
    Preset { name: "fig1e", command: "portrait", description: "phase portrait, e > B, m < m0" },
    Preset { name: "fig1f", command: "portrait", description: "phase portrait, e > B, m = m0" },
    Preset { name: "fig1g", command: "portrait", description: "phase portrait, e > B, m0 < m < m*" },
    Preset { name: "fig1h", command: "portrait", description: "phase portrait, e > B, m = m*" },
    Preset { name: "fig1i", command: "portrait", description: "phase portrait, e > B, m > m*" },
    Preset { name: "fig2", command: "sweep", description: "saddle-node diagram in m, e = delta = 0.1" },
    Preset { name: "fig3", command: "simulate-ode", description: "u(t) for several dispersal rates" },
    Preset { name: "fig4", command: "simulate-ode", description: "u(t) for several Allee constants" },
    Preset { name: "fig5", command: "simulate-ode", description: "linear dispersal, several dispersal rates" },
    Preset { name: "fig-lin-quadratic", command: "simulate-pde", description: "linear dispersal, quadratic data" },
    Preset { name: "fig-lin-gauss-1.8", command: "simulate-pde", description: "linear dispersal, Gaussians at 1.8 and 0.4" },
    Preset { name: "fig-lin-gauss-1.9", command: "simulate-pde", description: "linear dispersal, Gaussians at 1.9 and 0.4" },
    Preset { name: "fig-lin-gauss-1.9-0.65", command: "simulate-pde", description: "linear dispersal, Gaussians at 1.9 and 0.4 (weight 0.65)" },
    Preset { name: "fig-nonlin-flat", command: "simulate-pde", description: "nonlinear dispersal, flat data" },
    Preset { name: "fig-nonlin-flat-l3", command: "simulate-pde", description: "nonlinear dispersal, flat data, Allee patch [0, L/3]" },
    Preset { name: "fig-nonlin-gauss", command: "simulate-pde", description: "nonlinear dispersal, Gaussians on a 1e-4 floor" },
    Preset { name: "fig-lin-extinction", command: "simulate-pde", description: "linear dispersal, strong Allee effect and fast dispersal" },
];

fn fig1(e: f64, m: f64) -> Scenario {
    let p = OdeParams { m, e, h: 0.9, delta: 0.1, s: 0.9 };
    let mut sc = Scenario::ode(ModelKind::NonlinearOde, p);
    sc.options.grid = Some(GridSpec {
        u_min: 0.0,
        u_max: 1.2,
        v_min: 0.0,
        v_max: 1.2,
        nu: 25,
        nv: 25,
    });
    sc.options.t_end = Some(patchdyn::ode_sim::DEFAULT_HORIZON);
    sc.notes = Some("grid box [0,1.2]^2 and horizon chosen for display".into());
    sc
}

const PDE_NOTE: &str = "coefficient profile (Allee patch m=0.7, e=0.04, h=0.9, s=0.9; free patch s=0.9) and L1 = L/2 are default choices, not measured values";

fn pde(kind: DispersalKind, d1: f64, d2: f64, initial: InitialData) -> Scenario {
    let mut sc = Scenario::pde(PdeConfig::new(kind, d1, d2, initial));
    sc.notes = Some(PDE_NOTE.into());
    sc
}

fn quadratic() -> InitialData {
    InitialData::Quadratic {
        u_offset: 3.0,
        v_offset: 2.0,
    }
}

/// The scenario behind preset `name`, with `command` set.
pub fn preset(name: &str) -> Option<Scenario> {
    let entry = PRESETS.iter().find(|p| p.name == name)?;
    let mut sc = match name {
        "fig1a" => fig1(0.05, 2.0),
        "fig1b" => fig1(0.09, 1.5),
        "fig1c" => fig1(0.09, 1.0 / 0.99),
        "fig1d" => fig1(0.09, 0.5),
        "fig1e" => fig1(0.1, 0.4),
        "fig1f" => fig1(0.1, (1.0 - 0.1f64.sqrt()).powi(2)),
        "fig1g" => fig1(0.1, 0.5),
        "fig1h" => fig1(0.1, 0.9 / 1.1),
        "fig1i" => fig1(0.1, 0.9),
        "fig2" => {
            let p = OdeParams { m: 0.5, e: 0.1, h: 0.9, delta: 0.1, s: 0.9 };
            let mut sc = Scenario::ode(ModelKind::NonlinearOde, p);
            sc.options.m_lo = Some(0.05);
            sc.options.m_hi = Some(1.0);
            sc.options.steps = Some(200);
            sc.notes = Some("m in params is unused by the sweep".into());
            sc
        }
        "fig3" => {
            let p = OdeParams { m: 0.7, e: 0.04, h: 0.9, delta: 0.1, s: 0.9 };
            let mut sc = Scenario::ode(ModelKind::NonlinearOde, p);
            sc.family = Some(Family {
                parameter: FamilyParameter::Delta,
                values: vec![0.001, 0.01, 0.03, 0.05, 0.1],
            });
            sc.options.u0 = Some(0.1);
            sc.options.v0 = Some(0.5);
            sc.options.t_end = Some(200.0);
            sc.notes = Some("delta values, initial state (0.1, 0.5) and horizon 200 chosen here".into());
            sc
        }
        "fig4" => {
            let p = OdeParams { m: 0.7, e: 0.04, h: 0.9, delta: 0.1, s: 0.9 };
            let mut sc = Scenario::ode(ModelKind::NonlinearOde, p);
            sc.family = Some(Family {
                parameter: FamilyParameter::M,
                values: vec![0.2, 0.7, 1.5, 3.0],
            });
            sc.options.u0 = Some(0.1);
            sc.options.v0 = Some(0.5);
            sc.options.t_end = Some(200.0);
            sc.notes = Some(
                "m values, initial state (0.1, 0.5) and horizon 200 chosen here; with these values e < B".into(),
            );
            sc
        }
        "fig5" => {
            let p = OdeParams { m: 2.0, e: 2.0, h: 1.0, delta: 2.5, s: 1.0 };
            let mut sc = Scenario::ode(ModelKind::LinearOde, p);
            sc.family = Some(Family {
                parameter: FamilyParameter::Delta,
                values: vec![2.5, 3.0, 4.0],
            });
            sc.options.u0 = Some(1.0);
            sc.options.v0 = Some(1.0);
            sc.options.t_end = Some(20.0);
            sc.notes = Some("delta values, initial state (1, 1) and horizon 20 chosen here".into());
            sc
        }
        "fig-lin-quadratic" => pde(DispersalKind::Linear, 0.4, 0.004, quadratic()),
        "fig-lin-gauss-1.8" => pde(
            DispersalKind::Linear,
            0.4,
            0.004,
            InitialData::double_gaussian(1.8, 1.0, 0.0),
        ),
        "fig-lin-gauss-1.9" => pde(
            DispersalKind::Linear,
            0.4,
            0.004,
            InitialData::double_gaussian(1.9, 1.0, 0.0),
        ),
        "fig-lin-gauss-1.9-0.65" => pde(
            DispersalKind::Linear,
            0.4,
            0.004,
            InitialData::double_gaussian(1.9, 0.65, 0.0),
        ),
        "fig-nonlin-flat" => pde(DispersalKind::Nonlinear, 2.0, 3.0, InitialData::Flat { u: 5.0, v: 5.0 }),
        "fig-nonlin-flat-l3" => {
            let mut sc = pde(DispersalKind::Nonlinear, 2.0, 3.0, InitialData::Flat { u: 5.0, v: 5.0 });
            if let Some(cfg) = sc.pde.as_mut() {
                cfg.patch_boundary = Some(cfg.length / 3.0);
            }
            sc
        }
        "fig-nonlin-gauss" => pde(
            DispersalKind::Nonlinear,
            2.0,
            3.0,
            InitialData::double_gaussian(1.9, 1.0, 1e-4),
        ),
        "fig-lin-extinction" => {
            let mut sc = pde(DispersalKind::Linear, 2.5, 2.5, quadratic());
            if let Some(cfg) = sc.pde.as_mut() {
                cfg.profile = CoefficientProfile::Patches {
                    allee: PatchCoefficients { m: 2.0, e: 2.0, h: 1.0, s: 1.0 },
                    free: PatchCoefficients { m: 0.0, e: 0.0, h: 1.0, s: 0.5 },
                };
            }
            sc.notes = Some(
                "Allee patch (m, e, h, s) = (2, 2, 1, 1) follows the linear ODE extinction example; free-patch s = 0.5 chosen so that the free patch cannot sustain the fast-dispersing population".into(),
            );
            sc
        }
        _ => unreachable!("every PRESETS entry has a scenario"),
    };
    sc.command = Some(entry.command.to_owned());
    Some(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for p in PRESETS {
            let sc = preset(p.name).unwrap();
            if sc.model.is_pde() {
                sc.pde_config().unwrap().validate().unwrap();
            } else {
                sc.ode_members().unwrap();
            }
        }
    }

    #[test]
    fn unknown_preset_is_none() {
        assert!(preset("fig9").is_none());
    }
}
