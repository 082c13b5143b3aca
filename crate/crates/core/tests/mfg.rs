use hjlab::mfg::{solve_density, solve_mfg, Coupling, CouplingKind, MfgOptions, MfgSetup};
use proptest::prelude::*;

fn small() -> MfgSetup {
    MfgSetup { n: 32, nt: 32, ..MfgSetup::default() }
}

fn opts() -> MfgOptions {
    MfgOptions { nt_internal: 256, ..MfgOptions::default() }
}

#[test]
fn homogeneous_steady_state() {
    let setup = MfgSetup { bump_amplitude: 0.0, terminal_amplitude: 0.0, ..small() };
    let strength = 1.7;
    let p = setup.problem(Coupling::new(CouplingKind::Monotone, 2.0, strength).unwrap()).unwrap();
    let sol = solve_mfg(&p, &opts()).unwrap();
    assert!(sol.converged());
    let g = p.grid;
    for j in 0..=g.nt {
        // m ≡ 1 and u = (T − t) c 1^r
        let tau = g.t_final - g.time(j);
        assert!(sol.m.slices[j].values.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(sol.u.slices[j].values.iter().all(|v| (v - strength * tau).abs() < 1e-10));
    }
}

#[test]
fn decoupled_problem_takes_one_sweep() {
    let p = small().problem(Coupling::new(CouplingKind::Monotone, 1.0, 0.0).unwrap()).unwrap();
    let sol = solve_mfg(&p, &opts()).unwrap();
    assert!(sol.converged());
    assert_eq!(sol.iterations(), 1);
    let again = solve_density(&p, &sol.u, 256).unwrap();
    assert!(again.sub(&sol.m).max_abs() < 1e-14);
}

#[test]
fn monotone_run_converges_and_keeps_mass() {
    let p = small().problem(Coupling::new(CouplingKind::Monotone, 1.0, 1.0).unwrap()).unwrap();
    let sol = solve_mfg(&p, &opts()).unwrap();
    assert!(sol.converged(), "{}", sol.diagnosis);
    assert!(sol.iterations() <= 200);
    for s in &sol.m.slices {
        assert!((s.integral() - 1.0).abs() < 1e-10);
        assert!(s.min() >= -1e-8 * s.max());
    }
}

#[test]
fn invalid_options_rejected() {
    let p = small().problem(Coupling::new(CouplingKind::Monotone, 1.0, 1.0).unwrap()).unwrap();
    assert!(solve_mfg(&p, &MfgOptions { damping: 0.0, ..opts() }).is_err());
    assert!(solve_mfg(&p, &MfgOptions { tol: 0.0, ..opts() }).is_err());
    assert!(Coupling::new(CouplingKind::Focusing, -1.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn coupling_shapes(r in 0.1..4.0f64, c in 0.0..3.0f64, m1 in 0.0..5.0f64, m2 in 0.0..5.0f64) {
        let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
        let mono = Coupling::new(CouplingKind::Monotone, r, c).unwrap();
        let foc = Coupling::new(CouplingKind::Focusing, r, c).unwrap();
        prop_assert!(mono.g(lo) <= mono.g(hi) + 1e-12);
        prop_assert!(foc.g(lo) >= foc.g(hi) - 1e-12);
        prop_assert!(foc.g(hi) <= 0.0);
        prop_assert!((mono.g(hi) - c * hi.powf(r)).abs() < 1e-12 * (1.0 + c * hi.powf(r)));
        // derivative against a central difference away from zero
        let m = hi + 0.5;
        let h = 1e-6;
        let fd = (mono.g(m + h) - mono.g(m - h)) / (2.0 * h);
        prop_assert!((fd - mono.g_prime(m)).abs() < 1e-5 * (1.0 + fd.abs()));
    }
}
