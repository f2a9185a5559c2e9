//! Analysis and simulation of a two-patch population model in which one
//! patch carries a strong Allee effect and the other grows logistically.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameters, right-hand sides, Jacobians.
//! * [`equilibria`]: closed-form equilibria, thresholds, stability labels,
//!   regime cases and global verdicts.
//! * [`bifurcation`]: saddle-node transversality checks, parameter sweeps and
//!   sensitivity of the stable equilibrium.
//! * [`integrate`]: an adaptive Dormand–Prince 5(4) integrator.
//! * [`ode_sim`]: trajectories, phase portraits and basin maps.
//! * [`pde`]: the reaction-diffusion extension on an interval.
//!
//! Every type that ends up in an output file implements `serde`'s traits.

pub mod bifurcation;
pub mod equilibria;
pub mod error;
pub mod integrate;
pub mod model;
pub mod ode_sim;
pub mod pde;

pub use error::{Error, Result};
pub use model::{Matrix2, Model, OdeParams, OriginalParams, State, Validation};
