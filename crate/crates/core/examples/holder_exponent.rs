//! Hölder seminorm at the predicted exponent and the fitted exponent.

use hjlab::lab::{run_holder_experiment, LadderSetup};

fn main() -> hjlab::Result<()> {
    let setup = LadderSetup { slices_per_sigma2: 8.0, ..LadderSetup::default() };
    let rec = run_holder_experiment(3.0, 1, 4.0, &[0.2, 0.141, 0.1], 0, &setup, 4)?;
    println!("alpha_pred = {:?}", rec.book.and_then(|b| b.alpha_pred));
    for row in &rec.rows {
        println!("sigma {:.3}: {:?}", row.params["sigma"], row.values);
    }
    for v in &rec.verdicts {
        println!("{}: measured {:.4}, tolerance {:.4}, passed {}", v.name, v.measured, v.tolerance, v.passed);
    }
    Ok(())
}
