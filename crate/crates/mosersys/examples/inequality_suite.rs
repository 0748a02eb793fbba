//! Randomized certification of the pointwise and integral inequalities.
//!
//! Three pointwise families on (0,6]^2 with model weights, plus the
//! superquadratic growth of the coupling Hamiltonian, swept with a seeded
//! generator; then the quartic moment bound int u^2 (e^{gamma u^2} - 1)
//! <= C(gamma) int u^4 on random smooth fields with unit Dirichlet energy.

use std::f64::consts::PI;

use mosersys::constants::{
    check_quartic_moment_bound, pointwise_inequality_suite, random_smooth_unit_field,
};
use mosersys::{Grid, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mosersys::Result<()> {
    let report = pointwise_inequality_suite(100_000, 42, 1e-12);
    println!("pointwise suite over {} samples:", report.samples);
    println!("  cross term          violations = {}", report.cross_violations);
    println!("  reduced cross term  violations = {}", report.reduced_cross_violations);
    println!("  tail comparison     violations = {}", report.tail_violations);
    println!("  superquadratic      violations = {}", report.superquadratic_violations);
    assert!(report.all_pass());

    let grid = Grid::new(Shape::UnitSquare, 63)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("\nquartic moment bound on 20 random smooth unit-energy fields:");
    for gamma in [1.0, PI, 2.0 * PI, 3.9 * PI] {
        let mut worst: f64 = 0.0;
        let mut rng_fields = Vec::new();
        for _ in 0..20 {
            rng_fields.push(random_smooth_unit_field(&grid, &mut rng)?);
        }
        for u in &rng_fields {
            let (lhs, rhs, ok) = check_quartic_moment_bound(&grid, u, gamma)?;
            assert!(ok, "bound violated at gamma = {gamma}");
            worst = worst.max(lhs / rhs);
        }
        println!("  gamma = {gamma:>9.5}: max lhs/rhs = {worst:.6}");
    }
    println!("\nno violations anywhere");
    Ok(())
}
