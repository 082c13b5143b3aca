//! Acceptance criteria A1–A12, one PASS/FAIL line each.
//!
//! Run with `cargo test --test acceptance`. Pass/fail is decided here from
//! independent oracles where one exists; library verdicts are only echoed.
//! Criteria in `KNOWN_FAILING` print FAIL without failing the process; any
//! other failure exits nonzero.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use hjlab::exponents::{ExponentBook, HolderBranch};
use hjlab::fp::{solve_fp, Direction, FPProblem};
use hjlab::hamiltonian::HamiltonianSpec;
use hjlab::hj::{solve_hj, Forcing, HJProblem};
use hjlab::lab::{
    check_duality_identity, check_stability, run_holder_experiment, run_lp_sweep, run_maxreg_sweep, sign_test,
    CriticalSetup, LadderSetup, ManufacturedCase,
};
use hjlab::mfg::{
    monitor_first_order, monitor_second_order, solve_mfg, sweep_thresholds, Coupling, CouplingKind, InitialGuess,
    MfgOptions, MfgSetup,
};
use hjlab::norms::{holder_seminorm, lp_norm};
use hjlab::runner::execute::gaussian_density;
use hjlab::runner::spaces::{verify_spaces, SpacesSetup};
use hjlab::{Field, TorusGrid, VectorField};

/// Criteria recorded as unattained in the decisions ledger.
const KNOWN_FAILING: &[&str] = &["A6"];

type Outcome = std::result::Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: hjlab::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn band(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `U(x) = Σ_i 0.3 sin(2πx_i + i) + 0.1 cos(2π Σx)`, written out again here.
fn profile(x: &[f64]) -> f64 {
    let s: f64 = x.iter().enumerate().map(|(i, &xi)| 0.3 * (2.0 * PI * xi + i as f64).sin()).sum();
    s + 0.1 * (2.0 * PI * x.iter().sum::<f64>()).cos()
}

fn manufactured_error(d: usize, gamma: f64, n: usize, nt: usize) -> std::result::Result<f64, String> {
    let case = ManufacturedCase::new(d, gamma, n, nt, 0.5);
    let (problem, sol, _) = lib(case.solve())?;
    let g = problem.grid;
    let mut err: f64 = 0.0;
    for (j, s) in sol.u.slices.iter().enumerate() {
        let decay = (-g.time(j)).exp();
        for (idx, v) in s.values.iter().enumerate() {
            let x = g.coords(idx);
            err = err.max((v - decay * profile(&x[..d])).abs());
        }
    }
    Ok(err)
}

fn a1() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [1, 2] {
        for gamma in [1.5, 2.0, 3.0] {
            let t = Instant::now();
            let coarse = manufactured_error(d, gamma, 64, 4096)?;
            let fine = manufactured_error(d, gamma, 128, 16384)?;
            let ratio = coarse / fine;
            let secs = t.elapsed().as_secs_f64();
            ok &= coarse <= 1e-5 && ratio >= 3.0 && secs <= 120.0;
            lines.push(format!("d={d} g={gamma}: err {coarse:.2e} ratio {ratio:.1} {secs:.0}s"));
        }
    }
    ensure(ok, lines.join("; "))
}

/// Heat flow of `e^{−u0}` by a direct (non-FFT) discrete Fourier sum.
fn heat_by_dft(w0: &[f64], t: f64) -> Vec<f64> {
    let n = w0.len();
    let coef: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, v) in w0.iter().enumerate() {
                let a = -2.0 * PI * (k * j) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            (re / n as f64, im / n as f64)
        })
        .collect();
    (0..n)
        .map(|j| {
            let mut s = 0.0;
            for (k, &(re, im)) in coef.iter().enumerate() {
                let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                let damp = common::heat_factor(kk, t);
                let a = 2.0 * PI * (k * j) as f64 / n as f64;
                s += damp * (re * a.cos() - im * a.sin());
            }
            s
        })
        .collect()
}

fn a2() -> Outcome {
    let (n, stored, nt, t_final) = (64, 16, 4096, 0.5);
    let grid = lib(TorusGrid::new(1, n, t_final, stored))?;
    let u0 = Field::from_fn(grid, |x| 0.5 * (2.0 * PI * x[0]).cos());
    let spec = lib(HamiltonianSpec::uniform(grid, 2.0))?;
    let sol = lib(solve_hj(&lib(HJProblem::new(grid, spec, Forcing::Zero, u0.clone()))?, nt))?;
    let w0: Vec<f64> = u0.values.iter().map(|v| (-v).exp()).collect();
    let mut err: f64 = 0.0;
    for (j, s) in sol.u.slices.iter().enumerate() {
        let w = heat_by_dft(&w0, grid.time(j));
        for (a, b) in s.values.iter().zip(&w) {
            err = err.max((a + b.ln()).abs());
        }
    }
    ensure(err <= 1e-5, format!("max |u + log(heat e^-u0)| = {err:.2e}"))
}

fn a3() -> Outcome {
    let mut defects = Vec::new();
    let mut slack_ok = true;
    for (n, nt) in [(64, 4096), (128, 16384)] {
        let mut case = ManufacturedCase::new(1, 2.0, n, nt, 0.5);
        case.stored = nt;
        let (problem, sol, _) = lib(case.solve())?;
        let rho = gaussian_density(problem.grid, 0.3, 0.1);
        let rep = lib(check_duality_identity(&sol.u, &problem.f, &problem.spec, &rho, Some(&[n as i64 / 8])))?;
        // recompute the relative defect from the reported terms
        let rhs = rep.u0_term + rep.f_term + rep.lagrangian_term;
        defects.push((rep.u_tau - rhs).abs() / rep.u_tau.abs().max(rhs.abs()));
        slack_ok &= rep.shifted.as_ref().is_some_and(|s| s.slack >= 0.0);
    }
    let gain = defects[0] / defects[1];
    ensure(
        defects[0] <= 1e-3 && gain >= 2.0 && slack_ok,
        format!("defect {:.2e} -> {:.2e}, gain {gain:.1}, shifted slack >= 0: {slack_ok}", defects[0], defects[1]),
    )
}

fn a4() -> Outcome {
    // transport with a smooth drift: mass and positivity on every stored step
    let (d, n, t_final, nt) = (2, 32, 0.25, 512);
    let grid = lib(TorusGrid::new(d, n, t_final, nt))?;
    let drift: Vec<VectorField> = (0..=nt)
        .map(|j| {
            let s = 1.0 + grid.time(j);
            let bx = Field::from_fn(grid, |x| s * (2.0 * PI * x[1]).sin());
            let by = Field::from_fn(grid, |x| 0.5 * s * (2.0 * PI * x[0]).cos());
            VectorField::new(vec![bx, by]).expect("same grid")
        })
        .collect();
    let rho_tau = Field::from_fn(grid, |x| {
        let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
        (-r2 / 0.02).exp()
    });
    let mass0 = rho_tau.values.iter().sum::<f64>() / grid.points() as f64;
    let rho = lib(solve_fp(&lib(FPProblem::new(grid, drift, rho_tau, Direction::Backward))?, nt))?;
    let mut mass_drift: f64 = 0.0;
    let mut neg: f64 = 0.0;
    for s in &rho.slices {
        let m = s.values.iter().sum::<f64>() / grid.points() as f64;
        mass_drift = mass_drift.max((m - mass0).abs());
        let hi = s.values.iter().cloned().fold(f64::MIN, f64::max);
        let lo = s.values.iter().cloned().fold(f64::MAX, f64::min);
        neg = neg.max((-lo / hi).max(0.0));
    }
    // zero drift: a single mode decays by the heat multiplier
    let g1 = lib(TorusGrid::new(1, 64, 0.25, 64))?;
    let k = 3.0;
    let rho0 = Field::from_fn(g1, |x| 1.0 + 0.5 * (2.0 * PI * k * x[0]).cos());
    let zero = vec![VectorField::zeros(g1); g1.nt + 1];
    let heat = lib(solve_fp(&lib(FPProblem::new(g1, zero, rho0, Direction::Forward))?, 256))?;
    let mut zd: f64 = 0.0;
    for (j, s) in heat.slices.iter().enumerate() {
        let damp = common::heat_factor(k, g1.time(j));
        for (idx, v) in s.values.iter().enumerate() {
            let x = g1.coords(idx)[0];
            zd = zd.max((v - 1.0 - 0.5 * damp * (2.0 * PI * k * x).cos()).abs());
        }
    }
    ensure(
        mass_drift <= 1e-10 && neg <= 1e-8 && zd <= 1e-8,
        format!("mass drift {mass_drift:.1e}, negativity {neg:.1e}, zero-drift error {zd:.1e}"),
    )
}

fn a5() -> Outcome {
    let sigmas = [0.2, 0.141, 0.1, 0.0707];
    let setup = LadderSetup::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for (gamma, q) in [(1.5, 2.0), (3.0, 3.5)] {
        let t = Instant::now();
        let rec = lib(run_maxreg_sweep(gamma, 1, q, &sigmas, &[0], &setup))?;
        let ms: Vec<f64> = rec.rows.iter().filter_map(|r| r.values.get("m_sigma").copied()).collect();
        let fs: Vec<f64> = rec.rows.iter().filter_map(|r| r.values.get("f_lq").copied()).collect();
        let mean = fs.iter().sum::<f64>() / fs.len().max(1) as f64;
        let f_dev = fs.iter().map(|f| (f / mean - 1.0).abs()).fold(0.0, f64::max);
        let b = band(&ms);
        let secs = t.elapsed().as_secs_f64();
        ok &= ms.len() == sigmas.len() && b <= 4.0 && f_dev <= 0.05 && secs <= 900.0;
        lines.push(format!("g={gamma} q={q}: band {b:.2}, forcing deviation {:.1}%, {secs:.0}s", 100.0 * f_dev));
    }
    ensure(ok, lines.join("; "))
}

fn a6() -> Outcome {
    let book = lib(ExponentBook::new(1, 3.0, 4.0))?;
    let alpha = book.alpha_pred.unwrap_or(f64::NAN);
    let oracle = common::alpha_formula(1.0, 3.0, 4.0);
    let rec = lib(run_holder_experiment(3.0, 1, 4.0, &[0.2, 0.1, 0.05, 0.025], 0, &LadderSetup::default(), 16))?;
    let semis: Vec<f64> = rec.rows.iter().filter_map(|r| r.values.get("seminorm").copied()).collect();
    let b = band(&semis);
    let hat = rec.verdict("alpha_hat_roughest").map(|v| v.measured).unwrap_or(f64::NAN);
    ensure(
        (alpha - oracle).abs() < 1e-12 && (alpha - 0.75).abs() < 1e-12 && b <= 4.0 && hat >= alpha - 0.1,
        format!("alpha_pred {alpha}, seminorm band {b:.2}, fitted alpha on roughest rung {hat:.3} (need >= {:.2})", alpha - 0.1),
    )
}

fn a7() -> Outcome {
    let (d, gamma) = (1, 1.5);
    let q = common::q_sub(d as f64, gamma);
    let book = lib(ExponentBook::new(d, gamma, q))?;
    let setup = CriticalSetup::default();
    let problem = lib(setup.problem(d, gamma, q))?;
    let rep = lib(check_stability(&problem, &[1.0, 2.0, 4.0, 8.0], &book, setup.nt_internal))?;
    let ratios: Vec<f64> = rep.rows.iter().map(|r| r.lhs / r.rhs).collect();
    let b = band(&ratios);
    let decreasing = rep.rows.windows(2).all(|w| w[1].rhs < w[0].rhs);
    ensure(
        (q - 1.0).abs() < 1e-12 && b <= 4.0 && decreasing,
        format!("q = {q}, ratio band {b:.3}, rhs decreasing {decreasing}"),
    )
}

fn a8() -> Outcome {
    let (gamma, d, q) = (1.5, 2, 1.9);
    let book = lib(ExponentBook::new(d, gamma, q))?;
    let p_oracle = d as f64 * q / (d as f64 + 2.0 - 2.0 * q);
    let setup = LadderSetup { slices_per_sigma2: 4.0, points_per_sigma: 9.0, ..LadderSetup::default() };
    let sigmas = [0.2, 0.141, 0.1, 0.0707];
    let rec = lib(run_lp_sweep(gamma, d, q, &sigmas, 0, &setup))?;
    let ratios: Vec<f64> = rec.rows.iter().filter_map(|r| r.values.get("ratio").copied()).collect();
    let b = band(&ratios);
    let sup = lib(sign_test(&book, &setup, 0.0707, 0))?;
    ensure(
        (book.p_dual - 19.0).abs() < 1e-9 && (p_oracle - 19.0).abs() < 1e-9 && ratios.len() == 4 && b <= 4.0 && sup <= 1e-6,
        format!("p = {:.3}, ratio band {b:.3} over {} rungs, sign test sup u = {sup:.2e}", book.p_dual, ratios.len()),
    )
}

fn a9() -> Outcome {
    let rec = lib(verify_spaces(&SpacesSetup { members: 100, seed: 0 }))?;
    let failing: Vec<&str> = rec.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
    let ensembles = rec.verdicts.iter().filter(|v| v.name.ends_with("_bounded")).count();
    let identities = rec.verdicts.iter().filter(|v| v.name.contains("identity")).count();
    // anchors against oracles computed here, not by the library
    let grid = lib(TorusGrid::new(1, 256, 1.0, 1))?;
    let u = Field::from_fn(grid, |x| (6.0 * PI * x[0]).cos());
    let lp3 = lib(lp_norm(&u, 3.0))? / common::cosine_lp_quadrature(3.0) - 1.0;
    let hold = lib(holder_seminorm(&u, 0.5))? / common::mode_quotient_sup(3.0, 0.5) - 1.0;
    ensure(
        failing.is_empty() && ensembles == 6 && identities == 4 && lp3.abs() <= 0.05 && hold.abs() <= 0.05,
        format!(
            "{ensembles} ensembles, {identities} identities, failing {failing:?}; oracle anchors lp3 {:.1e} holder {:.1e}",
            lp3.abs(),
            hold.abs()
        ),
    )
}

fn a10() -> Outcome {
    let t = Instant::now();
    let setup = MfgSetup::default();
    let coupling = lib(Coupling::new(CouplingKind::Monotone, 1.0, 1.0))?;
    let problem = lib(setup.problem(coupling))?;
    let opts = MfgOptions::default();
    let sol = lib(solve_mfg(&problem, &opts))?;
    let converged = sol.converged() && sol.iterations() <= 200;
    let fo = lib(monitor_first_order(&sol, &problem))?;
    let so = lib(monitor_second_order(&sol, &problem))?;
    let finite = [fo.gradient_energy, fo.density_energy, so.hessian_energy, so.density_gradient_energy]
        .iter()
        .all(|v| v.is_finite());
    let alt = lib(solve_mfg(&problem, &MfgOptions { initial: InitialGuess::Uniform, ..opts.clone() }))?;
    // the stopping rule is an L¹(Q_T) residual, so agreement is measured in the same norm
    let g = problem.grid;
    let per_slice: Vec<f64> = sol
        .m
        .slices
        .iter()
        .zip(&alt.m.slices)
        .map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum::<f64>() / g.points() as f64)
        .collect();
    let h = g.dt();
    let diff = h * (per_slice.iter().sum::<f64>() - 0.5 * (per_slice[0] + per_slice[g.nt]));
    let sup = sol.m.sub(&alt.m).max_abs();

    // uniform density and zero terminal cost: m ≡ 1, u = (T − t)·g(1) = T − t
    let flat = MfgSetup { bump_amplitude: 0.0, terminal_amplitude: 0.0, ..setup };
    let fp = lib(flat.problem(coupling))?;
    let fs = lib(solve_mfg(&fp, &opts))?;
    let g = fp.grid;
    let mut steady: f64 = 0.0;
    for j in 0..=g.nt {
        let tau = g.t_final - g.time(j);
        steady = steady.max(fs.m.slices[j].values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
        steady = steady.max(fs.u.slices[j].values.iter().map(|v| (v - tau).abs()).fold(0.0, f64::max));
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(
        converged && finite && fo.identity_defect <= 1e-3 && diff <= 10.0 * opts.tol && steady <= 1e-10 && secs <= 600.0,
        format!(
            "{} iterations, identity defect {:.1e}, guesses differ {diff:.1e} in L1 ({sup:.1e} sup), steady state {steady:.1e}, {secs:.0}s",
            sol.iterations(),
            fo.identity_defect
        ),
    )
}

fn a11() -> Outcome {
    let base = MfgSetup { d: 2, n: 32, t_final: 0.25, nt: 32, ..MfgSetup::default() };
    let opts = MfgOptions { nt_internal: 128, ..MfgOptions::default() };
    let threshold = common::r_focusing(2.0, 2.0);
    let mut runs = Vec::new();
    for a in [0.5, 1.0, 2.0, 4.0] {
        let setup = MfgSetup { terminal_amplitude: a, ..base };
        let problem = lib(setup.problem(lib(Coupling::new(CouplingKind::Focusing, 0.5, 1.0))?))?;
        let sol = lib(solve_mfg(&problem, &opts))?;
        runs.push((sol, problem));
    }
    let all_converged = runs.iter().all(|(s, _)| s.converged());
    let rep = lib(hjlab::mfg::check_gnct(&runs))?;
    // refit the slope here from the reported sides
    let pts: Vec<(f64, f64)> = rep.drift_energy.iter().zip(&rep.density_energy).map(|(x, y)| (x.ln(), y.ln())).collect();
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64,
        pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64,
    );
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    // above the threshold: recorded only
    let above = lib(sweep_thresholds(&base, CouplingKind::Focusing, 1.0, &[1.5], &opts))?;
    let recorded = above.rows.len() == 1;
    ensure(
        (threshold - 1.0).abs() < 1e-12 && all_converged && slope < 1.0 && recorded,
        format!(
            "r=0.5: converged {all_converged}, delta_hat {slope:.3}; r=1.5 recorded as {:?}",
            above.rows.first().map(|r| r.status)
        ),
    )
}

fn a12() -> Outcome {
    let gammas = [1.2, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0];
    let factors = [0.8, 1.1, 1.6, 2.5, 5.0];
    let mut worst: f64 = 0.0;
    let mut branch_errors = 0;
    let mut points = 0;
    for (i, &g) in gammas.iter().enumerate() {
        for (j, &f) in factors.iter().enumerate() {
            let d = 1 + (i + j) % 3;
            let df = d as f64;
            let q = (f * common::q_sub(df, g)).max(1.0);
            let b = ExponentBook::new(d, g, q).map_err(|e| e.to_string())?;
            points += 1;
            let gc = common::conj(g);
            worst = worst
                .max((1.0 / g + 1.0 / b.gamma_conj - 1.0).abs())
                .max((b.gamma_conj - gc).abs())
                .max((b.q_crit_sub - common::q_sub(df, g)).abs())
                .max((b.q_crit_super - common::q_super(df, g)).abs())
                .max((b.r_max_focusing - common::r_focusing(df, g)).abs());
            let rm = common::r_monotone(df, g);
            if rm.is_finite() {
                worst = worst.max((b.r_max_monotone - rm).abs());
            } else if b.r_max_monotone.is_finite() {
                branch_errors += 1;
            }
            let upper = (df + 2.0) / (gc - 1.0);
            let expected = if q <= common::q_sub(df, g) {
                HolderBranch::None
            } else if q < upper {
                HolderBranch::Formula
            } else {
                HolderBranch::Free
            };
            if b.holder_branch != expected {
                branch_errors += 1;
            }
            if expected == HolderBranch::Formula {
                worst = worst.max((b.alpha_pred.unwrap_or(f64::NAN) - common::alpha_formula(df, g, q)).abs());
            }
        }
    }
    for d in 1..=3 {
        let b = lib(ExponentBook::new(d, 2.0, 3.0))?;
        worst = worst.max((b.q_crit_sub - b.q_crit_super).abs());
    }
    worst = worst.max((lib(ExponentBook::new(3, 2.0, 3.0))?.r_max_monotone - 2.0).abs());
    worst = worst.max((lib(ExponentBook::new(2, 2.0, 3.0))?.r_max_focusing - 1.0).abs());
    ensure(
        points == 50 && branch_errors == 0 && worst <= 1e-12,
        format!("{points} lattice points, worst deviation {worst:.1e}, branch mismatches {branch_errors}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
        ("A10", a10),
        ("A11", a11),
        ("A12", a12),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('A')).collect();
    let mut unexpected = Vec::new();
    for (id, f) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        let known = KNOWN_FAILING.contains(&id);
        match out {
            Ok(detail) => println!("PASS {id} ({secs:.1}s) {detail}"),
            Err(detail) => {
                println!("FAIL {id} ({secs:.1}s) {detail}{}", if known { " [known]" } else { "" });
                if !known {
                    unexpected.push(id);
                }
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
