//! Weakly coupled system on the two-constraint set.
//!
//! For couplings below the computable window min{beta_1, beta_2,
//! sqrt(mu1 mu2)} the minimizer over the set where both components'
//! constraints vanish separately has two nontrivial positive components, the
//! Lagrange matrix J is strictly diagonally dominant (its determinant has a
//! closed-form positive floor), and the level sits strictly below E1 + E2.

use mosersys::constants::beta_thresholds;
use mosersys::scalar::{solve_scalar_ground_state, ScalarOptions};
use mosersys::system::{
    det_j_lower_bound, matrix_j, moment_identity_gap, solve_small_beta, SystemOptions,
};
use mosersys::{Grid, ModelParams, Shape};

fn main() -> mosersys::Result<()> {
    let grid = Grid::new(Shape::UnitSquare, 63)?;
    let base = ModelParams {
        lambda1: 0.0,
        lambda2: 0.0,
        mu1: 2.0,
        mu2: 3.0,
        beta: 0.0,
    };
    let sopts = ScalarOptions::default();
    let gs1 = solve_scalar_ground_state(&grid, base.lambda1, base.mu1, &sopts)?;
    let gs2 = solve_scalar_ground_state(&grid, base.lambda2, base.mu2, &sopts)?;
    println!("scalar levels: E1 = {:.8}, E2 = {:.8}", gs1.energy, gs2.energy);

    let th = beta_thresholds(&grid, &base, &gs1, &gs2)?;
    let window = th.beta1.min(th.beta2).min(base.mu_geo());
    let p = base.with_beta(0.1 * window);
    println!(
        "window min{{beta1, beta2, sqrt(mu1 mu2)}} = {window:.6}; running beta = {:.6}",
        p.beta
    );

    let sol = solve_small_beta(&grid, &p, (&gs1, &gs2), &SystemOptions::default())?;
    println!("\ncoupled level c_beta   = {:.10}", sol.level);
    println!("reference E1 + E2      = {:.10}", sol.level_reference);
    println!("masses                 = ({:.6}, {:.6})", sol.masses.0, sol.masses.1);
    println!("min values             = ({:.3e}, {:.3e})", sol.min_values.0, sol.min_values.1);
    println!(
        "constraint residuals   = ({:.3e}, {:.3e})",
        sol.constraint_residuals.0, sol.constraint_residuals.1
    );
    println!(
        "PDE residuals          = ({:.3e}, {:.3e})",
        sol.pde_residuals.0, sol.pde_residuals.1
    );

    // Lagrange matrix at the solution, against its closed-form floor
    // 4 (mu1 mu2 - beta^2) int u^4 e^{u^2} int v^4 e^{v^2}.
    let j = matrix_j(&grid, &p, &sol.u, &sol.v)?;
    let (floor, _scale) = det_j_lower_bound(&grid, &p, &sol.u, &sol.v)?;
    println!("\ndet J = {:.6e}, floor = {:.6e}", j.det(), floor);

    // Derivative-free consistency: the p-moment identity ties the level to
    // the constraint values for every exponent p.
    for pexp in [2.0, 3.0, 4.0] {
        let gap = moment_identity_gap(&grid, &p, &sol.u, &sol.v, pexp)?;
        println!("moment identity gap (p = {pexp}) = {gap:.3e}");
    }

    println!("\ncertificates: {:?}", sol.certificates);
    assert!(sol.certificates.all_pass());
    Ok(())
}
