//! Limiting dynamics of spherical mixed p-spin glasses in a magnetic field:
//! a two-time integro-differential solver, a finite-N Langevin simulator to
//! check it against, and the stationary (FDT) analysis with its phase
//! boundary.

pub mod bundle;
pub mod cli;
pub mod error;
pub mod fdt;
pub mod field;
pub mod integrator;
pub mod langevin;
pub mod model;
pub mod series;

pub use bundle::{SchemeMeta, Slice, SolutionBundle};
pub use error::{Error, Result};
pub use field::{FieldKind, TwoTimeField};
pub use integrator::{
    check_invariants, integrate, integrate_hard, integrate_soft, IntegratorConfig,
    InvariantReport, InvariantTolerances,
};
pub use model::{ConfinementSpec, MixtureSpec, ModelParams, Order};
