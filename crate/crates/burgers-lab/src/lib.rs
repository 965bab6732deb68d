//! Numerical laboratory for Burgers-type equations and their lattice
//! analogues.
//!
//! The crate builds and verifies, end to end, the constructive objects of the
//! long-time theory of shock fronts for the viscous equation
//! `f_t + phi(f) f_x = eps f_xx` and its difference-differential analogue
//! `F_t + phi(F)(F(x) - F(x-1)) = 0`:
//!
//! - [`flux`]: the flux `phi`, wave speeds, shock-profile conditions, the
//!   potential `Phi`, and the degeneracy classification with logarithmic
//!   front-shift coefficients;
//! - [`wavetrain`]: traveling-wave profiles for both models, with tail
//!   asymptotics and residual oracles;
//! - [`lattice`] / [`pde`]: explicit time integrators preserving
//!   monotonicity and boundedness on moving windows;
//! - [`kernel`]: the discrete Green-Poisson kernel, its difference
//!   identities and bounds, and the integral representation of lattice
//!   differences;
//! - [`asymptotics`]: the front-shift functional, its logarithmic law,
//!   rate diagnostics, front-flatness estimates, and balance offsets;
//! - [`subsolution`]: explicit lower barriers (diffusive tail, diffusion
//!   piece, wave-train piece) with patching and comparison checks;
//! - [`ineq`]: the weighted-log integral bound and the geometric
//!   Gronwall-type iteration;
//! - [`accept`]: the acceptance suite wired to the `reproduce` CLI command.
//!
//! Every runnable capability has an example under `examples/`; the thin
//! `burgers-lab` binary exposes the same pipelines as subcommands.

// Guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0` they also
// catch NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accept;
pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod flux;
pub mod ineq;
pub mod kernel;
pub mod lattice;
pub mod numerics;
pub mod pde;
pub mod report;
pub mod subsolution;
pub mod wavetrain;

pub use error::{Error, Result};
