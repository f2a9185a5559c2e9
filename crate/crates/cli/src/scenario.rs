//! A fully resolved description of one run. Presets, scenario files and
//! flags all reduce to a [`Scenario`], and the manifest echoes it back so a
//! run can be repeated from its own output.

use std::path::PathBuf;

use patchdyn::ode_sim::GridSpec;
use patchdyn::pde::PdeConfig;
use patchdyn::{Model, OdeParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A family value (absent outside families) and its parameter set.
pub type Member = (Option<f64>, OdeParams);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    NonlinearOde,
    LinearOde,
    LinearPde,
    NonlinearPde,
}

impl ModelKind {
    pub fn ode(self) -> Option<Model> {
        match self {
            ModelKind::NonlinearOde => Some(Model::Nonlinear),
            ModelKind::LinearOde => Some(Model::Linear),
            _ => None,
        }
    }

    pub fn is_pde(self) -> bool {
        matches!(self, ModelKind::LinearPde | ModelKind::NonlinearPde)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyParameter {
    M,
    Delta,
}

impl FamilyParameter {
    pub fn column(self) -> &'static str {
        match self {
            FamilyParameter::M => "m",
            FamilyParameter::Delta => "delta",
        }
    }
}

/// Several runs that differ in one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub parameter: FamilyParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default)]
    pub include_boundary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Subcommand this scenario was written for; checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<OdeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde: Option<PdeConfig>,
    #[serde(default)]
    pub options: RunOptions,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub gnuplot: bool,
    /// Free-form provenance of preset values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl Scenario {
    pub fn ode(model: ModelKind, params: OdeParams) -> Self {
        Self {
            command: None,
            model,
            params: Some(params),
            family: None,
            pde: None,
            options: RunOptions::default(),
            format: Format::default(),
            out: None,
            gnuplot: false,
            notes: None,
        }
    }

    pub fn pde(config: PdeConfig) -> Self {
        let model = match config.kind {
            patchdyn::pde::DispersalKind::Linear => ModelKind::LinearPde,
            patchdyn::pde::DispersalKind::Nonlinear => ModelKind::NonlinearPde,
        };
        Self {
            command: None,
            model,
            params: None,
            family: None,
            pde: Some(config),
            options: RunOptions::default(),
            format: Format::default(),
            out: None,
            gnuplot: false,
            notes: None,
        }
    }

    /// The ODE model and the parameter sets to run: one per family value,
    /// or the single parameter block.
    pub fn ode_members(&self) -> Result<(Model, Vec<Member>), CliError> {
        let model = self.model.ode().ok_or_else(|| {
            CliError::Validation(format!("this command needs an ODE model, got {:?}", self.model))
        })?;
        let base = self
            .params
            .ok_or_else(|| CliError::Validation("scenario has no `params` block".into()))?;
        base.validate(model.validation())?;
        let members = match &self.family {
            None => vec![(None, base)],
            Some(f) => {
                if f.values.is_empty() {
                    return Err(CliError::Validation("family has no values".into()));
                }
                f.values
                    .iter()
                    .map(|&x| {
                        let p = match f.parameter {
                            FamilyParameter::M => base.with_m(x),
                            FamilyParameter::Delta => base.with_delta(x),
                        };
                        p.validate(model.validation())?;
                        Ok((Some(x), p))
                    })
                    .collect::<Result<_, CliError>>()?
            }
        };
        Ok((model, members))
    }

    /// The single parameter set for commands that do not take families.
    pub fn single_ode(&self) -> Result<(Model, OdeParams), CliError> {
        if self.family.is_some() {
            return Err(CliError::Validation(
                "this command runs one parameter set; the scenario defines a family".into(),
            ));
        }
        let (model, mut members) = self.ode_members()?;
        Ok((model, members.remove(0).1))
    }

    pub fn pde_config(&self) -> Result<&PdeConfig, CliError> {
        if !self.model.is_pde() {
            return Err(CliError::Validation(format!(
                "simulate-pde needs a PDE model, got {:?}",
                self.model
            )));
        }
        let cfg = self
            .pde
            .as_ref()
            .ok_or_else(|| CliError::Validation("scenario has no `pde` block".into()))?;
        let expected = if self.model == ModelKind::LinearPde {
            patchdyn::pde::DispersalKind::Linear
        } else {
            patchdyn::pde::DispersalKind::Nonlinear
        };
        if cfg.kind != expected {
            return Err(CliError::Validation(format!(
                "model {:?} disagrees with pde.kind {:?}",
                self.model, cfg.kind
            )));
        }
        Ok(cfg)
    }

    pub fn family_column(&self) -> Option<&'static str> {
        self.family.as_ref().map(|f| f.parameter.column())
    }
}
