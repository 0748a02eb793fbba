//! Grid-based variational solver for two-component elliptic systems with
//! exponential coupling on 2D domains.
//!
//! The library computes positive ground states of
//!
//!   -Lap u + lambda1 u = H_u(u, v),   -Lap v + lambda2 v = H_v(u, v)
//!
//! on the unit square or unit disk with Dirichlet data, where H couples the
//! components through exponentially growing (critical-type) nonlinearities,
//! in three coupling regimes: small positive beta (two-constraint manifold),
//! large positive beta (diagonal constraint), and negative beta
//! (positive-part functional). It also certifies the computable constants
//! and inequalities underlying the regime thresholds.
//!
//! Entry points: [`grid::Grid`] for domains, [`scalar::solve_scalar_ground_state`],
//! the `system` module's three regime solvers, [`constants`] for thresholds
//! and certificates, and [`runner::run`] for the config-driven pipeline that
//! backs the `mosersys` binary.

pub mod config;
pub mod constants;
pub mod error;
pub mod grid;
pub mod nonlin;
pub mod report;
pub mod runner;
pub mod scalar;
pub mod system;
pub(crate) mod util;

pub use error::{Error, Result};
pub use grid::{Field, Grid, GridId, Shape};
pub use nonlin::ModelParams;
