//! Error against the smooth solution `e^{−t}U(x)` and its refinement ratio.

use hjlab::lab::ManufacturedCase;

fn main() -> hjlab::Result<()> {
    for gamma in [1.5, 2.0, 3.0] {
        let coarse = ManufacturedCase::new(1, gamma, 64, 4096, 0.5).run()?;
        let fine = ManufacturedCase::new(1, gamma, 128, 16384, 0.5).run()?;
        println!(
            "gamma {gamma}: error {:.3e} -> {:.3e}, ratio {:.2}",
            coarse.max_error,
            fine.max_error,
            coarse.max_error / fine.max_error
        );
    }
    Ok(())
}
