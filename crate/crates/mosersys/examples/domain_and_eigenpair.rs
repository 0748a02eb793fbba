//! Dirichlet spectral sanity on both supported domains.
//!
//! The principal eigenvalue of -Lap on the unit square is 2 pi^2, and on the
//! unit disk it is the square of the first Bessel-J0 zero. The 5-point stencil
//! converges at second order on the square; on the disk the staircase
//! boundary costs an order, so expect roughly O(h) there.

use std::f64::consts::PI;

use mosersys::{Grid, Shape};

fn main() -> mosersys::Result<()> {
    let targets = [
        (Shape::UnitSquare, 2.0 * PI * PI, "unit square"),
        (Shape::UnitDisk, 5.783185962946785, "unit disk"),
    ];
    for (shape, exact, name) in targets {
        println!("{name}: exact principal eigenvalue {exact:.12}");
        println!("{:>6} {:>16} {:>12}", "n", "lambda_1(h)", "rel error");
        let mut prev_err: Option<f64> = None;
        for n in [31usize, 63, 127] {
            let grid = Grid::new(shape, n)?;
            let lam = grid.principal_eigenvalue()?;
            let err = (lam - exact).abs() / exact;
            match prev_err {
                Some(p) => println!(
                    "{n:>6} {lam:>16.10} {err:>12.3e}   order {:.2}",
                    (p / err).log2()
                ),
                None => println!("{n:>6} {lam:>16.10} {err:>12.3e}"),
            }
            prev_err = Some(err);
        }
        println!();
    }
    Ok(())
}
