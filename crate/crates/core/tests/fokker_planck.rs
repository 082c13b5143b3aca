mod common;

use std::f64::consts::PI;

use hjlab::fp::{solve_fp, Direction, FPProblem};
use hjlab::{Field, TorusGrid, VectorField};
use proptest::prelude::*;

fn mean(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() / f.values.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mass_and_positivity(a in -2.0..2.0f64, b in -2.0..2.0f64, c in 0.2..0.8f64, backward in any::<bool>()) {
        let g = TorusGrid::new(2, 32, 0.1, 64).unwrap();
        let drift: Vec<VectorField> = (0..=g.nt)
            .map(|_| {
                let bx = Field::from_fn(g, |x| a * (2.0 * PI * x[1]).sin());
                let by = Field::from_fn(g, |x| b * (2.0 * PI * (x[0] + x[1])).cos());
                VectorField::new(vec![bx, by]).unwrap()
            })
            .collect();
        let rho0 = Field::from_fn(g, |x| {
            let dx = hjlab::grid::periodic_delta(x[0], c);
            let dy = hjlab::grid::periodic_delta(x[1], 0.5);
            (-(dx * dx + dy * dy) / 0.02).exp()
        });
        let dir = if backward { Direction::Backward } else { Direction::Forward };
        let m0 = mean(&rho0);
        let rho = solve_fp(&FPProblem::new(g, drift, rho0, dir).unwrap(), 256).unwrap();
        for s in &rho.slices {
            prop_assert!((mean(s) - m0).abs() <= 1e-10);
            let hi = s.values.iter().cloned().fold(f64::MIN, f64::max);
            let lo = s.values.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(lo >= -1e-8 * hi, "min {lo} max {hi}");
        }
    }
}

#[test]
fn zero_drift_is_the_heat_flow() {
    let g = TorusGrid::new(2, 16, 0.05, 10).unwrap();
    let rho0 = Field::from_fn(g, |x| 2.0 + (2.0 * PI * x[0]).cos() + 0.5 * (2.0 * PI * (2.0 * x[0] - 3.0 * x[1])).sin());
    let zero = vec![VectorField::zeros(g); g.nt + 1];
    let rho = solve_fp(&FPProblem::new(g, zero, rho0, Direction::Forward).unwrap(), 40).unwrap();
    let mut err: f64 = 0.0;
    for (j, s) in rho.slices.iter().enumerate() {
        let t = g.time(j);
        for (i, v) in s.values.iter().enumerate() {
            let x = g.coords(i);
            let exact = 2.0
                + common::heat_factor(1.0, t) * (2.0 * PI * x[0]).cos()
                + 0.5 * common::heat_factor(13f64.sqrt(), t) * (2.0 * PI * (2.0 * x[0] - 3.0 * x[1])).sin();
            err = err.max((v - exact).abs());
        }
    }
    assert!(err < 1e-8, "{err}");
}

#[test]
fn constant_drift_translates() {
    // ∂_t ρ − Δρ + div(cρ) = 0 carries a mode along +c t
    let g = TorusGrid::new(1, 64, 0.01, 4).unwrap();
    let c = 0.7;
    let drift = vec![VectorField::constant(g, &[c]); g.nt + 1];
    let rho0 = Field::from_fn(g, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos());
    let rho = solve_fp(&FPProblem::new(g, drift, rho0, Direction::Forward).unwrap(), 400).unwrap();
    let t = g.t_final;
    let err = rho
        .last()
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = g.coords(i)[0];
            (v - 1.0 - 0.5 * common::heat_factor(1.0, t) * (2.0 * PI * (x - c * t)).cos()).abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}
