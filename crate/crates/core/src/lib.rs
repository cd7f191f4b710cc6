//! Semi-implicit time stepping for a dissipative three-field model of
//! hydrogen storage in metal hydrides (temperature `θ`, phase fraction `χ`,
//! pressure `p`), with runtime monitors for the discrete invariants the
//! scheme is known to preserve.
//!
//! The crate is layered bottom-up:
//!
//! * [`model`]: the function `h`, the internal-energy map `psi`, the phase
//!   graph `β` and the enthalpy / dissipation functionals;
//! * [`discretization`]: finite-volume grids, fields and the operators `A`, `B`;
//! * [`solvers`]: conjugate gradients, the phase inclusion, the pressure and
//!   temperature sub-solves;
//! * [`timestepper`]: initial data, one step, full runs;
//! * [`diagnostics`]: ledgers, refinement studies and manufactured solutions;
//! * [`config`]: the sectioned `key = value` run configuration.

pub mod config;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod model;
pub mod solvers;
pub mod timestepper;

pub use error::{Error, Result};
