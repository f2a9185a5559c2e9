use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "patchdyn",
    version,
    about = "Two-patch population model with a strong Allee effect: equilibria, bifurcations, ODE and PDE runs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibria with stability labels and eigenvalues.
    Equilibria(OdeCommand),
    /// Regime case and global-stability verdict.
    Regime(OdeCommand),
    /// Equilibrium branches over a range of the Allee constant.
    Sweep(SweepCommand),
    /// Derivatives of the stable equilibrium with respect to the Allee constant.
    Sensitivity(SweepCommand),
    /// One trajectory per parameter set.
    SimulateOde(SimulateOdeCommand),
    /// Label each node of a grid of initial states by its attractor.
    Basin(GridCommand),
    /// Vector field samples and seeded trajectories.
    Portrait(GridCommand),
    /// Method-of-lines run of the reaction-diffusion system.
    SimulatePde(SimulatePdeCommand),
    /// Bundled presets.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetsAction {
    /// List preset names with their intended subcommand.
    List(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Nonlinear,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Literal,
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitialArg {
    Flat,
    Quadratic,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Start from a bundled preset (see `presets list`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Start from a scenario JSON file, such as the `scenario` field of a
    /// previous run's manifest.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Output file, or a directory for commands that write several tables.
    /// Without it, tables are embedded in the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script next to the output.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub e: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
}

impl ParamArgs {
    pub fn any(&self) -> bool {
        self.m.is_some()
            || self.e.is_some()
            || self.h.is_some()
            || self.delta.is_some()
            || self.s.is_some()
            || self.model.is_some()
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct OdeCommand {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepCommand {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub m_lo: Option<f64>,
    #[arg(long)]
    pub m_hi: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Include the equilibria on the u-axis.
    #[arg(long)]
    pub boundary: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateOdeCommand {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub u0: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridCommand {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub u_min: Option<f64>,
    #[arg(long)]
    pub u_max: Option<f64>,
    #[arg(long)]
    pub v_min: Option<f64>,
    #[arg(long)]
    pub v_max: Option<f64>,
    #[arg(long)]
    pub nu: Option<usize>,
    #[arg(long)]
    pub nv: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Basin labelling distance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulatePdeCommand {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub delta1: Option<f64>,
    #[arg(long)]
    pub delta2: Option<f64>,
    #[arg(long)]
    pub length: Option<f64>,
    /// Right end of the Allee patch.
    #[arg(long)]
    pub patch_boundary: Option<f64>,
    #[arg(long, value_enum)]
    pub form: Option<FormArg>,
    #[arg(long, value_enum)]
    pub initial: Option<InitialArg>,
    /// Flat value or quadratic offset for u.
    #[arg(long)]
    pub u0: Option<f64>,
    /// Flat value or quadratic offset for v.
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<f64>,
}

impl SimulatePdeCommand {
    /// True when any flag that defines the physical problem is present.
    pub fn defines_problem(&self) -> bool {
        self.kind.is_some()
            || self.delta1.is_some()
            || self.delta2.is_some()
            || self.length.is_some()
            || self.patch_boundary.is_some()
            || self.form.is_some()
            || self.initial.is_some()
            || self.u0.is_some()
            || self.v0.is_some()
    }
}
