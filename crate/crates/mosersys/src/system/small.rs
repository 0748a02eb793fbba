//! Weak-attraction solver: minimize the pair energy over the two-constraint
//! set. Below the coupling threshold the minimum exists, is attained by a
//! componentwise positive pair, and sits strictly below the sum of the two
//! scalar levels — that strict split saving is the regime's headline
//! certificate.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::nonlin::ModelParams;
use crate::scalar::ScalarGroundState;
use crate::system::{descent, project, Regime, SystemOptions, SystemSolution};

/// Minimize I over { G1 = G2 = 0 } for 0 < beta < sqrt(mu1 mu2), seeded from
/// the pair of decoupled scalar ground states. The seeds must be solved on
/// `grid` with the matching potentials (lambda1, mu1) and (lambda2, mu2).
pub fn solve_small_beta(
    grid: &Grid,
    p: &ModelParams,
    seeds: (&ScalarGroundState, &ScalarGroundState),
    opts: &SystemOptions,
) -> Result<SystemSolution> {
    let lam1 = grid.principal_eigenvalue()?;
    p.validate(lam1)?;
    if !(p.beta > 0.0 && p.beta < p.mu_geo()) {
        return Err(Error::Hypothesis(format!(
            "weak-attraction regime needs 0 < beta < sqrt(mu1 mu2) = {:.6}, got {}",
            p.mu_geo(),
            p.beta
        )));
    }
    let (s1, s2) = seeds;
    grid.check(&s1.u)?;
    grid.check(&s2.u)?;

    // Scale the decoupled pair back onto the constraint set; the rescaled
    // pair is the interior maximum of its own two-parameter surface, hence
    // an admissible start whose level already undercuts E1 + E2.
    let fc = project::project_m_beta(grid, p, &s1.u, &s2.u)?;
    let rt = fc.t.sqrt();
    let rs = fc.s.sqrt();
    let u0 = grid.field_from_values(s1.u.values().iter().map(|x| rt * x).collect())?;
    let v0 = grid.field_from_values(s2.u.values().iter().map(|x| rs * x).collect())?;
    let e_sum = s1.energy + s2.energy;

    let out = descent::descend_on_m(grid, p, &u0, &v0, opts, None)?;
    descent::finalize_two_constraint(
        grid,
        p,
        out,
        Regime::SmallPositive,
        e_sum,
        |level| level < e_sum - 1e-10,
        None,
    )
}
