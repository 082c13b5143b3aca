//! Quadratic case against `−log(e^{tΔ} e^{−u₀})`.

use std::f64::consts::PI;

use hjlab::lab::hopf_cole_error;
use hjlab::{Field, TorusGrid};

fn main() -> hjlab::Result<()> {
    let g = TorusGrid::new(1, 64, 0.5, 16)?;
    for a in [0.25, 0.5, 1.0] {
        let u0 = Field::from_fn(g, |x| a * (2.0 * PI * x[0]).cos() + 0.5 * a * (4.0 * PI * x[0]).sin());
        for nt in [1024, 4096] {
            println!("amplitude {a}, nt {nt}: max error {:.3e}", hopf_cole_error(&u0, 0.5, 16, nt)?);
        }
    }
    Ok(())
}
