use std::f64::consts::PI;

use hjlab::hamiltonian::HamiltonianSpec;
use hjlab::hj::{solve_hj, Forcing, HJProblem, HJSign};
use hjlab::lab::{hopf_cole_error, ManufacturedCase};
use hjlab::stepper::Integrator;
use hjlab::{Field, LabError, TorusGrid};

#[test]
fn kpz_flip_negates_the_solution() {
    let g = TorusGrid::new(1, 32, 0.25, 8).unwrap();
    let spec = HamiltonianSpec::uniform(g, 1.5).unwrap();
    let u0 = Field::from_fn(g, |x| 0.3 * (2.0 * PI * x[0]).sin() + 0.1 * (4.0 * PI * x[0]).cos());
    let f = Forcing::analytic(move |t| Field::from_fn(g, |x| (1.0 + t) * (2.0 * PI * x[0]).cos()));
    let u = solve_hj(&HJProblem::new(g, spec.clone(), f.clone(), u0.clone()).unwrap(), 512).unwrap();
    let flipped = HJProblem::new(g, spec, f, u0.scale(-1.0)).unwrap().with_sign(HJSign::KpzFlipped);
    let v = solve_hj(&flipped, 512).unwrap();
    let worst = u.u.slices.iter().zip(&v.u.slices).map(|(a, b)| a.add(b).max_abs()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn manufactured_solution_coarse() {
    for gamma in [1.5, 2.0, 3.0] {
        let case = ManufacturedCase::new(1, gamma, 32, 1024, 0.5);
        let (problem, sol, out) = case.solve().unwrap();
        // exact solution written out independently
        let g = problem.grid;
        let mut err: f64 = 0.0;
        for (j, s) in sol.u.slices.iter().enumerate() {
            let e = (-g.time(j)).exp();
            for (i, v) in s.values.iter().enumerate() {
                let x = g.coords(i)[0];
                let exact = e * (0.3 * (2.0 * PI * x).sin() + 0.1 * (2.0 * PI * x).cos());
                err = err.max((v - exact).abs());
            }
        }
        assert!(err < 1e-4, "gamma {gamma}: {err}");
        assert!((err - out.max_error).abs() < 1e-12);
    }
}

#[test]
fn both_integrators_converge() {
    let mut case = ManufacturedCase::new(1, 2.0, 32, 2048, 0.25);
    case.integrator = Integrator::IfSsp2;
    let a = case.run().unwrap().max_error;
    case.integrator = Integrator::Etd2;
    let b = case.run().unwrap().max_error;
    assert!(a < 1e-4 && b < 1e-4, "{a} {b}");
}

#[test]
fn hopf_cole_quadratic_case() {
    let g = TorusGrid::new(1, 64, 1.0, 1).unwrap();
    let u0 = Field::from_fn(g, |x| 0.5 * (2.0 * PI * x[0]).cos());
    let err = hopf_cole_error(&u0, 0.5, 16, 4096).unwrap();
    assert!(err < 1e-5, "{err}");
}

#[test]
fn blow_up_is_reported_as_data() {
    // a forcing that switches on abruptly makes |Du| jump by far more than 10x in one step
    let g = TorusGrid::new(1, 32, 0.5, 4).unwrap();
    let spec = HamiltonianSpec::uniform(g, 3.0).unwrap();
    let f = Forcing::analytic(move |t| {
        let a = if t >= 0.25 { 1e8 } else { 0.0 };
        Field::from_fn(g, |x| a * (2.0 * PI * x[0]).cos())
    });
    let u0 = Field::from_fn(g, |x| 0.01 * (2.0 * PI * x[0]).sin());
    let err = solve_hj(&HJProblem::new(g, spec, f, u0).unwrap(), 64).unwrap_err();
    assert!(err.is_blow_up(), "{err}");
    match err {
        LabError::BlowUp { t, .. } => assert!(t >= 0.25),
        other => panic!("{other}"),
    }
}

#[test]
fn step_count_must_fit_stored_slices() {
    let g = TorusGrid::new(1, 16, 0.1, 8).unwrap();
    let spec = HamiltonianSpec::uniform(g, 2.0).unwrap();
    let p = HJProblem::new(g, spec, Forcing::Zero, Field::zeros(g)).unwrap();
    assert!(solve_hj(&p, 12).is_err());
    assert_eq!(solve_hj(&p, 16).unwrap().u.slices.len(), 9);
}
