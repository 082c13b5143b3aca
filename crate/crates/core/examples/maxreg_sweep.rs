//! Maximal-regularity functional across a short σ-ladder.

use hjlab::lab::{run_maxreg_sweep, LadderSetup};

fn main() -> hjlab::Result<()> {
    let setup = LadderSetup { slices_per_sigma2: 8.0, ..LadderSetup::default() };
    let rec = run_maxreg_sweep(1.5, 1, 2.0, &[0.2, 0.141, 0.1], &[0], &setup)?;
    for row in &rec.rows {
        println!("sigma {:.3}  n {:>4}  {:?}", row.params["sigma"], row.params["n"], row.values);
    }
    for v in &rec.verdicts {
        println!("{} {} (measured {:.4}, tolerance {})", v.name, if v.passed { "ok" } else { "violated" }, v.measured, v.tolerance);
    }
    Ok(())
}
