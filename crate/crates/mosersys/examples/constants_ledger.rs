//! Every computable constant in the theory, in one pass.
//!
//! Prints the subcritical embedding constant C(gamma) with its two branches,
//! checks the closed form C(pi)/pi = (320/9) e^{2/3} to machine precision,
//! certifies lower bounds for the critical concentration supremum d_{4pi}
//! by two independent routes, evaluates the seven-term coupling floor and
//! the scalar level floor, and assembles the full beta-threshold ladder for
//! a sample model.

use std::f64::consts::PI;

use mosersys::constants::{
    beta_star_lower_bound, beta_thresholds, c_gamma, c_gamma_branches, d4pi_spectral_lower_bound,
    d4pi_trial_lower_bound, moser_sup_check, scalar_level_lower_bound,
};
use mosersys::scalar::{solve_scalar_ground_state, ScalarOptions};
use mosersys::{Grid, ModelParams, Shape};

fn main() -> mosersys::Result<()> {
    println!("subcritical embedding constant C(gamma):");
    println!("{:>10} {:>14} {:>14} {:>14}", "gamma/pi", "branch 1", "branch 2", "C(gamma)");
    for m in [0.25, 0.5, 1.0, 2.0, 3.0, 3.5, 3.9] {
        let gamma = m * PI;
        let (b1, b2) = c_gamma_branches(gamma);
        println!("{m:>10.2} {b1:>14.6} {b2:>14.6} {:>14.6}", c_gamma(gamma)?);
    }
    let closed = (320.0 / 9.0) * (2.0f64 / 3.0).exp();
    let gap = (c_gamma(PI)? / PI - closed).abs() / closed;
    println!("C(pi)/pi vs (320/9) e^(2/3): relative gap {gap:.3e}\n");

    let grid = Grid::new(Shape::UnitSquare, 63)?;
    let trial = d4pi_trial_lower_bound(512)?;
    let spectral = d4pi_spectral_lower_bound(&grid)?;
    println!("critical concentration supremum d_4pi >= {trial:.8} (trial profiles)");
    println!("                               d_4pi >= {spectral:.8} (spectral route)\n");

    let lam1 = grid.principal_eigenvalue()?;
    let p = ModelParams {
        lambda1: 1.0,
        lambda2: 2.0,
        mu1: 2.0,
        mu2: 3.0,
        beta: 0.0,
    };
    let floor = beta_star_lower_bound(&p, lam1, trial.max(spectral))?;
    println!("seven-term coupling floor at the certified d_4pi: beta* >= {floor:.8}");
    let (s4, _) = grid.best_sobolev_s4()?;
    let efloor = scalar_level_lower_bound(p.lambda1, p.mu1, lam1, s4)?;
    println!("scalar level floor for (lambda1, mu1): E1 >= {efloor:.8}\n");

    let sopts = ScalarOptions::default();
    let gs1 = solve_scalar_ground_state(&grid, p.lambda1, p.mu1, &sopts)?;
    let gs2 = solve_scalar_ground_state(&grid, p.lambda2, p.mu2, &sopts)?;
    let th = beta_thresholds(&grid, &p, &gs1, &gs2)?;
    println!("beta-threshold ladder at (lambda, mu) = ((1,2), (2,3)):");
    println!("  beta1 = {:>10.5}   beta2 = {:>10.5}", th.beta1, th.beta2);
    println!("  beta3 = {:>10.5}   beta4 = {:>10.5}", th.beta3, th.beta4);
    println!("  beta5 = {:>10.5}   beta6 = {:>10.5}", th.beta5, th.beta6);
    println!("  beta* = {:>10.5}   beta_bar0 = {:>10.5}", th.beta_star, th.beta_bar0);
    assert!(efloor <= gs1.energy);
    assert!(floor > 0.0);

    // Concentration probe: truncated-log bumps push the constrained
    // exponential mass well past its subcritical plateau once alpha > 4 pi,
    // for as long as the mesh resolves the shrinking plateau.
    println!("\nconcentration probe (alpha = 4.5 pi vs alpha = pi):");
    let hot = moser_sup_check(&grid, 4.5 * PI, 6)?;
    let cold = moser_sup_check(&grid, PI, 6)?;
    println!("  supercritical estimates: {:?}", hot.estimates);
    println!("  subcritical estimates:   {:?}", cold.estimates);
    println!("  best ratio {:.2}x vs {:.2}x", hot.best / hot.estimates[0], cold.best / cold.estimates[0]);
    Ok(())
}
