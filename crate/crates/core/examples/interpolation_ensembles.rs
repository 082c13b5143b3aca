//! Interpolation inequalities over random trigonometric polynomials.

use hjlab::interpolation::{check_gagliardo_nirenberg, gn_solve_s, run_ensemble};
use hjlab::TorusGrid;

fn main() -> hjlab::Result<()> {
    let g = TorusGrid::new(1, 128, 1.0, 1)?;
    for theta in [0.5, 0.55, 0.6, 0.65] {
        let s = gn_solve_s(1, 1.5, 2.0, theta)?;
        let sum = run_ensemble(g, 100, 6, 7, |u| check_gagliardo_nirenberg(u, 1.5, 2.0, s, theta))?;
        println!(
            "theta {theta}: s = {s:.4}, ratio in [{:.4}, {:.4}], mean {:.4}",
            sum.min, sum.max, sum.mean
        );
    }
    Ok(())
}
