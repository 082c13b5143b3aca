//! Spectral derivatives, the two-thirds projection and lattice shifts on a
//! two-dimensional trigonometric polynomial.

use std::f64::consts::PI;

use hjlab::spectral::{dealias, gradient, laplacian, shift};
use hjlab::{Field, TorusGrid};

fn main() -> hjlab::Result<()> {
    let g = TorusGrid::new(2, 32, 1.0, 1)?;
    let u = Field::from_fn(g, |x| (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos());
    let du = gradient(&u)?;
    let exact_dx = Field::from_fn(g, |x| 2.0 * PI * (2.0 * PI * x[0]).cos() * (4.0 * PI * x[1]).cos());
    println!("|d1 u - exact|_inf   = {:.3e}", du.components[0].sub(&exact_dx).max_abs());

    let lap = laplacian(&u)?;
    println!("|lap u + 20 pi^2 u|  = {:.3e}", lap.add(&u.scale(20.0 * PI * PI)).max_abs());

    // mode 12 lies outside the retained band n/3
    let high = Field::from_fn(g, |x| (24.0 * PI * x[0]).cos());
    println!("dealiased high mode  = {:.3e}", dealias(&high)?.max_abs());

    let moved = shift(&u, &[8, 0]);
    let exact = Field::from_fn(g, |x| (2.0 * PI * (x[0] - 0.25)).sin() * (4.0 * PI * x[1]).cos());
    println!("shift by a quarter   = {:.3e}", moved.sub(&exact).max_abs());
    Ok(())
}
