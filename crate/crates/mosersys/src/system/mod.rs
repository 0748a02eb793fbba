//! Coupled two-component ground states in the three coupling regimes:
//!
//! * weak attraction (small beta > 0): minimize I over the two-constraint
//!   set M = { (u,v) : G1 = G2 = 0, u,v != 0 }, level c_beta;
//! * strong attraction (large beta > 0): minimize I over the diagonal
//!   constraint set N = { <I'(u,v),(u,v)> = 0 }, level d_beta;
//! * weak repulsion (small beta < 0): descend the positive-part functional
//!   near the pair of decoupled scalar ground states, level compared to the
//!   two-parameter surface maximum d~_beta.
//!
//! Every solver returns a [`SystemSolution`] carrying the residuals and the
//! regime certificates it is required to establish; callers decide whether a
//! failed certificate is fatal.

mod descent;
mod large;
mod negative;
mod ops;
mod project;
mod small;

use serde::Serialize;

use crate::grid::Field;
use crate::nonlin::ModelParams;

pub use large::{large_beta_sweep, large_coupling_onset, quartic_ratios, solve_large_beta};
pub use negative::{d_tilde_level, solve_negative_beta};
pub use ops::{
    constraints_g, det_j_lower_bound, fiber_root_diag, fiber_root_diag_from, matrix_j,
    moment_identity_gap, pair_distance_h1, MatrixJ, CONSTRAINT_REL_TOL, PROJECTION_REL_TOL,
};
pub use project::{project_m_beta, project_m_beta_from};
pub use small::solve_small_beta;

/// Scaling coordinates of the two-parameter fiber (u, v) -> (sqrt(t) u, sqrt(s) v).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberCoords {
    pub t: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SmallPositive,
    LargePositive,
    Negative,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::SmallPositive => "small-positive",
            Regime::LargePositive => "large-positive",
            Regime::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SystemOptions {
    /// Relative first-order stationarity target for the full gradient.
    pub stationarity_tol: f64,
    pub max_iter: usize,
    /// Cap on |beta| for the repulsive solver; `None` means 0.2 sqrt(mu1 mu2).
    pub beta_negative_cap: Option<f64>,
}

impl Default for SystemOptions {
    fn default() -> Self {
        SystemOptions {
            stationarity_tol: 1e-6,
            max_iter: 6000,
            beta_negative_cap: None,
        }
    }
}

/// Pass/fail flags established at convergence. `Option` fields apply to a
/// single regime and stay `None` elsewhere.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SystemCertificates {
    /// Both components carry more than 1e-8 of their initial L2 mass.
    pub nontrivial: bool,
    /// Smallest nodal value of each component is strictly positive.
    pub positive: bool,
    /// Constraint residuals within 1e-8 relative.
    pub constraints_ok: bool,
    /// Regime level comparison: c < E1 + E2 (small), d <= min{E1, E2}
    /// (large), level <= d~ (negative).
    pub level_ordering: bool,
    /// Small/negative: the 2x2 constraint matrix passed its determinant
    /// check at every accepted iterate and at convergence. Large: positivity
    /// of the diagonal curvature a + 2c + b (the single-constraint
    /// nondegeneracy) at convergence.
    pub det_j_ok: bool,
    /// Exact moment decomposition agrees to 1e-10 relative for p in {2,3,4}.
    pub moment_identity_ok: bool,
    /// Large beta only: quadratic-form bound ||grad u||^2 + ||grad v||^2 <=
    /// 4 d / min{1, (l1+L1)/L1, (l2+L1)/L1}.
    pub norm_bound_ok: Option<bool>,
    /// Large beta with beta >= beta_bar0 only: beta * d <= 4 max{E1 b5, E2 b6}
    /// with 2% slack.
    pub beta_level_bound_ok: Option<bool>,
    /// Negative beta only: iterates stayed within the trust ball around the
    /// decoupled pair.
    pub within_delta_ball: Option<bool>,
}

impl SystemCertificates {
    pub fn all_pass(&self) -> bool {
        self.nontrivial
            && self.positive
            && self.constraints_ok
            && self.level_ordering
            && self.det_j_ok
            && self.moment_identity_ok
            && self.norm_bound_ok.unwrap_or(true)
            && self.beta_level_bound_ok.unwrap_or(true)
            && self.within_delta_ball.unwrap_or(true)
    }
}

#[derive(Debug, Clone)]
pub struct SystemSolution {
    pub u: Field,
    pub v: Field,
    pub params: ModelParams,
    pub regime: Regime,
    /// I (or the positive-part functional) at the solution.
    pub level: f64,
    /// The comparison level of the regime: E1 + E2, min{E1, E2}, or d~_beta.
    pub level_reference: f64,
    /// Relative constraint residuals. Two-constraint regimes store
    /// (|G1|/A1, |G2|/A2); the diagonal regime stores the single Nehari
    /// residual |G1+G2|/(A1+A2) in both slots.
    pub constraint_residuals: (f64, f64),
    /// Componentwise ||J'||_2 / ||Lap||_2.
    pub pde_residuals: (f64, f64),
    /// det of the 2x2 constraint matrix at the solution.
    pub det_j: f64,
    /// (||grad u||_2, ||grad v||_2).
    pub grad_norms: (f64, f64),
    /// L2 masses (int u^2, int v^2).
    pub masses: (f64, f64),
    pub min_values: (f64, f64),
    pub certificates: SystemCertificates,
    pub iterations: usize,
}
