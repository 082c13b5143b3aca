//! Hamiltonian `h(x)|p|^γ + b·p`: evaluation, the Lagrangian and sampled
//! structure constants.

use std::f64::consts::PI;

use hjlab::hamiltonian::HamiltonianSpec;
use hjlab::TorusGrid;

fn main() -> hjlab::Result<()> {
    let g = TorusGrid::new(1, 64, 1.0, 1)?;
    let gamma = 1.5;
    let spec = HamiltonianSpec::with_coefficients(g, gamma, |x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos(), &[0.2])?;
    let gc = spec.gamma_conj();
    let idx = 10;
    let h = spec.h.values[idx];
    for nu in [-2.0, -0.5, 0.3, 1.0, 4.0] {
        // for h|p|^γ the transform is (γ−1)γ^{−γ′}h^{1−γ′}|ν|^{γ′}, shifted by b
        let v: f64 = nu - 0.2;
        let closed = (gamma - 1.0) * gamma.powf(-gc) * h.powf(1.0 - gc) * v.abs().powf(gc);
        println!("L(x, {nu:5.2}) = {:.10}  closed form {:.10}", spec.legendre_transform(idx, &[nu]), closed);
    }
    let cert = spec.verify_assumptions(0.5)?;
    println!("{}", serde_json::to_string_pretty(&cert).expect("certificate serializes"));
    Ok(())
}
