//! Maps a validated config onto the laboratory calls.

use crate::error::{LabError, Result};
use crate::exponents::ExponentBook;
use crate::fp::{control_drift, solve_fp_with, Direction, FPProblem};
use crate::grid::{periodic_delta, Field, SpaceTimeField, TorusGrid, VectorField};
use crate::hamiltonian::HamiltonianSpec;
use crate::lab::{
    check_duality_identity, check_stability, manufactured_profile, run_holder_experiment, run_lp_sweep,
    run_maxreg_critical, run_maxreg_sweep, sign_test, ExperimentRecord, ManufacturedCase, RunRow, RunStatus, Verdict,
};
use crate::mfg::{
    check_gnct, check_m_integrability, gnct_sides, monitor_first_order, monitor_second_order, solve_mfg,
    spectral_tail_slope, sweep_thresholds, Coupling, CouplingKind, InitialGuess, MFGProblem, MFGSolution, MfgOptions,
    MfgSetup, MfgStatus,
};
use crate::norms::lq_spacetime_norm;
use crate::spectral;

use super::config::{ExperimentKind, RunConfig};
use super::spaces::{verify_spaces, SpacesSetup};

/// Record plus any solution fields to persist.
pub struct Execution {
    pub record: ExperimentRecord,
    pub slabs: Vec<(String, SpaceTimeField)>,
}

impl Execution {
    fn bare(record: ExperimentRecord) -> Self {
        Execution { record, slabs: Vec::new() }
    }
}

pub fn execute(cfg: &RunConfig, book: &ExponentBook) -> Result<Execution> {
    match cfg.kind {
        ExperimentKind::Hj => run_hj(cfg, book),
        ExperimentKind::Fp => run_fp(cfg, book),
        ExperimentKind::Duality => run_duality(cfg, book),
        ExperimentKind::Maxreg => {
            let seeds: Vec<u64> = (0..cfg.ladder.replicas as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
            let rec = run_maxreg_sweep(book.gamma, book.d, book.q, &cfg.ladder.sigmas, &seeds, &cfg.setup)?;
            Ok(Execution::bare(rec))
        }
        ExperimentKind::Holder => {
            let rec = run_holder_experiment(
                book.gamma,
                book.d,
                book.q,
                &cfg.ladder.sigmas,
                cfg.seed,
                &cfg.setup,
                cfg.ladder.max_slices,
            )?;
            Ok(Execution::bare(rec))
        }
        ExperimentKind::Lp => run_lp(cfg, book),
        ExperimentKind::Critical => Ok(Execution::bare(run_maxreg_critical(book.gamma, book.d, &cfg.ladder.ks, &cfg.critical)?)),
        ExperimentKind::Stability => run_stability(cfg, book),
        ExperimentKind::Mfg => run_mfg(cfg, book),
        ExperimentKind::Sweep => {
            let setup = mfg_setup(cfg, cfg.mfg.terminal_amplitudes[0]);
            let rec = sweep_thresholds(&setup, cfg.mfg.coupling, cfg.mfg.strength, &cfg.mfg.r_grid, &cfg.solver)?;
            Ok(Execution::bare(rec))
        }
        ExperimentKind::VerifySpaces => {
            let setup = SpacesSetup { members: cfg.tolerances.ensemble_members, seed: cfg.seed };
            Ok(Execution::bare(verify_spaces(&setup)?))
        }
    }
}

fn failed(mut row: RunRow, e: &LabError) -> RunRow {
    row.status = if e.is_blow_up() { RunStatus::BlowUp } else { RunStatus::Failed };
    row.message = e.to_string();
    row
}

fn manufactured(cfg: &RunConfig, book: &ExponentBook, n: usize, nt: usize, stored: usize) -> ManufacturedCase {
    let mut case = ManufacturedCase::new(book.d, book.gamma, n, nt, cfg.grid.t_final);
    case.stored = stored;
    case.integrator = cfg.grid.integrator;
    case
}

fn refinement(cfg: &RunConfig) -> Vec<(usize, usize)> {
    let g = &cfg.grid;
    let mut out = vec![(g.n, g.nt)];
    if g.refine {
        out.push((2 * g.n, 4 * g.nt));
    }
    out
}

fn run_hj(cfg: &RunConfig, book: &ExponentBook) -> Result<Execution> {
    let mut rec = ExperimentRecord::new("hj", Some(*book), "manufactured e^{-t}U".into());
    let mut slabs = Vec::new();
    let mut errors = Vec::new();
    for (i, (n, nt)) in refinement(cfg).into_iter().enumerate() {
        let stored = cfg.grid.stored.unwrap_or(16).min(nt);
        let row = RunRow::new(i, cfg.seed).param("n", n as f64).param("nt", nt as f64);
        match manufactured(cfg, book, n, nt, stored).solve() {
            Ok((_, sol, out)) => {
                let mut row = row;
                row.value("max_error", out.max_error);
                row.value("residual", out.residual);
                row.value("substeps", out.substeps as f64);
                errors.push(out.max_error);
                if i == 0 && cfg.output.slabs {
                    slabs.push(("u".to_string(), sol.u));
                }
                rec.rows.push(row);
            }
            Err(e) => rec.rows.push(failed(row, &e)),
        }
    }
    let base = errors.first().copied().unwrap_or(f64::INFINITY);
    rec.verdicts.push(Verdict::at_most("max_error", base, cfg.tolerances.accuracy));
    if cfg.grid.refine {
        let ratio = if errors.len() == 2 { errors[0] / errors[1] } else { 0.0 };
        rec.ratio("refinement_ratio", ratio);
        rec.verdicts.push(Verdict::at_least("refinement_ratio", ratio, cfg.tolerances.refinement_ratio));
    }
    Ok(Execution { record: rec, slabs })
}

/// Normalized Gaussian bump of width `w` at `c` in every coordinate.
pub fn gaussian_density(grid: TorusGrid, c: f64, w: f64) -> Field {
    let raw = Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|&xi| periodic_delta(xi, c).powi(2)).sum();
        (-r2 / (2.0 * w * w)).exp()
    });
    raw.scale(1.0 / raw.integral())
}

fn run_fp(cfg: &RunConfig, book: &ExponentBook) -> Result<Execution> {
    let g = &cfg.grid;
    let stored = g.stored.unwrap_or(g.nt);
    let grid = TorusGrid::new(book.d, g.n, g.t_final, stored)?;
    let spec = HamiltonianSpec::uniform(grid, book.gamma)?;
    let profile = manufactured_profile(grid);
    let w = SpaceTimeField::from_slice_fn(grid, |t| profile.scale((-t).exp()));
    let datum = gaussian_density(grid, 0.3, 0.1);
    let mut rec = ExperimentRecord::new("fp", Some(*book), "drift -D_pH(D e^{-t}U)".into());
    let mut slabs = Vec::new();

    let row = RunRow::new(0, cfg.seed).param("n", g.n as f64).param("nt", g.nt as f64);
    let drift = control_drift(&w, &spec)?;
    let mass0 = datum.integral();
    match solve_fp_with(&FPProblem::new(grid, drift, datum.clone(), Direction::Forward)?, g.nt, g.integrator) {
        Ok(rho) => {
            let mut row = row;
            let mass = rho.slices.iter().map(|s| (s.integral() - mass0).abs()).fold(0.0, f64::max);
            let neg = rho.slices.iter().map(|s| (-s.min()).max(0.0) / s.max()).fold(0.0, f64::max);
            row.value("mass_drift", mass);
            row.value("negativity", neg);
            rec.verdicts.push(Verdict::at_most("mass_drift", mass, crate::fp::MASS_TOL));
            rec.verdicts.push(Verdict::at_most("positivity", neg, cfg.tolerances.positivity));
            rec.rows.push(row);
            if cfg.output.slabs {
                slabs.push(("rho".to_string(), rho));
            }
        }
        Err(e) => {
            rec.rows.push(failed(row, &e));
            rec.verdicts.push(Verdict::flag("transport_completed", false));
        }
    }

    let row = RunRow::new(1, cfg.seed).param("n", g.n as f64).param("nt", g.nt as f64);
    let free = FPProblem::steady(grid, VectorField::zeros(grid), datum.clone(), Direction::Forward)?;
    match solve_fp_with(&free, g.nt, g.integrator) {
        Ok(rho) => {
            let mut row = row;
            let mut err: f64 = 0.0;
            for (j, s) in rho.slices.iter().enumerate() {
                err = err.max(s.sub(&spectral::heat_mollify(&datum, grid.time(j))?).max_abs());
            }
            row.value("zero_drift_error", err);
            rec.verdicts.push(Verdict::at_most("zero_drift", err, cfg.tolerances.zero_drift));
            rec.rows.push(row);
        }
        Err(e) => {
            rec.rows.push(failed(row, &e));
            rec.verdicts.push(Verdict::flag("zero_drift", false));
        }
    }
    Ok(Execution { record: rec, slabs })
}

fn run_duality(cfg: &RunConfig, book: &ExponentBook) -> Result<Execution> {
    let mut rec = ExperimentRecord::new("duality", Some(*book), "manufactured e^{-t}U, gaussian terminal density".into());
    let mut defects = Vec::new();
    let mut slabs = Vec::new();
    for (i, (n, nt)) in refinement(cfg).into_iter().enumerate() {
        let shift = cfg.grid.shift.unwrap_or(cfg.grid.n as i64 / 8) * (n / cfg.grid.n) as i64;
        let row = RunRow::new(i, cfg.seed).param("n", n as f64).param("nt", nt as f64).param("shift", shift as f64);
        let out = manufactured(cfg, book, n, nt, nt).solve().and_then(|(problem, sol, _)| {
            let rho_tau = gaussian_density(problem.grid, 0.3, 0.1);
            let mut xi = vec![0i64; book.d];
            xi[0] = shift;
            let rep = check_duality_identity(&sol.u, &problem.f, &problem.spec, &rho_tau, Some(&xi))?;
            Ok((rep, sol))
        });
        match out {
            Ok((rep, sol)) => {
                let mut row = row;
                row.value("defect", rep.defect);
                row.value("u_tau", rep.u_tau);
                row.value("u0_term", rep.u0_term);
                row.value("f_term", rep.f_term);
                row.value("lagrangian_term", rep.lagrangian_term);
                if let Some(s) = &rep.shifted {
                    row.value("shifted_lhs", s.lhs);
                    row.value("shifted_rhs", s.rhs);
                    row.value("shifted_slack", s.slack);
                    rec.verdicts.push(Verdict::at_least(&format!("shifted_slack_rung{i}"), s.slack, 0.0));
                }
                defects.push(rep.defect);
                if i == 0 && cfg.output.slabs {
                    slabs.push(("u".to_string(), sol.u));
                }
                rec.rows.push(row);
            }
            Err(e) => rec.rows.push(failed(row, &e)),
        }
    }
    rec.verdicts.push(Verdict::at_most("defect", defects.first().copied().unwrap_or(f64::INFINITY), cfg.tolerances.duality));
    if cfg.grid.refine {
        let gain = if defects.len() == 2 { defects[0] / defects[1] } else { 0.0 };
        rec.ratio("defect_gain", gain);
        rec.verdicts.push(Verdict::at_least("defect_gain", gain, cfg.tolerances.duality_gain));
    }
    Ok(Execution { record: rec, slabs })
}

fn run_lp(cfg: &RunConfig, book: &ExponentBook) -> Result<Execution> {
    let mut rec = run_lp_sweep(book.gamma, book.d, book.q, &cfg.ladder.sigmas, cfg.seed, &cfg.setup)?;
    // the comparison check uses the roughest rung
    let sigma = cfg.ladder.sigmas.iter().copied().fold(f64::INFINITY, f64::min);
    let row = RunRow::new(cfg.ladder.sigmas.len(), cfg.seed).param("sigma", sigma).param("sign_test", 1.0);
    match sign_test(book, &cfg.setup, sigma, cfg.seed) {
        Ok(sup) => {
            let mut row = row;
            row.value("sup_u", sup);
            rec.verdicts.push(Verdict::at_most("sign_test", sup, 1e-6));
            rec.rows.push(row);
        }
        Err(e) => {
            rec.rows.push(failed(row, &e));
            rec.verdicts.push(Verdict::flag("sign_test", false));
        }
    }
    Ok(Execution::bare(rec))
}

fn run_stability(cfg: &RunConfig, book: &ExponentBook) -> Result<Execution> {
    let c = &cfg.critical;
    let problem = c.problem(book.d, book.gamma, book.q)?;
    let rep = check_stability(&problem, &cfg.ladder.ks, book, c.nt_internal)?;
    let mut rec = ExperimentRecord::new("stability", Some(*book), format!("k={:?};sigma={}", cfg.ladder.ks, c.sigma));
    for (i, r) in rep.rows.iter().enumerate() {
        let mut row = RunRow::new(i, cfg.seed).param("k", r.k).param("p", rep.p);
        row.value("lhs", r.lhs);
        row.value("rhs", r.rhs);
        row.value("ratio", r.ratio);
        rec.rows.push(row);
    }
    rec.ratio("ratio_band", rep.band);
    rec.verdicts.push(Verdict::at_most("ratio_bounded", rep.band, cfg.setup.band));
    rec.verdicts.push(Verdict::flag("rhs_decreasing", rep.rhs_decreasing));
    Ok(Execution::bare(rec))
}

pub fn mfg_setup(cfg: &RunConfig, terminal_amplitude: f64) -> MfgSetup {
    let m = &cfg.mfg;
    MfgSetup {
        d: cfg.exponents.d,
        n: m.n,
        t_final: m.t_final,
        nt: m.nt,
        gamma: cfg.exponents.gamma,
        bump_amplitude: m.bump_amplitude,
        bump_width: m.bump_width,
        terminal_amplitude,
    }
}

fn mfg_row(i: usize, seed: u64, a: f64, sol: &MFGSolution, problem: &MFGProblem, mu: f64, p: f64) -> Result<RunRow> {
    let mut row = RunRow::new(i, seed).param("terminal_amplitude", a).param("r", problem.coupling.r);
    row.value("iterations", sol.iterations() as f64);
    row.value("residual", sol.residuals.last().copied().unwrap_or(f64::NAN));
    row.value("converged", if sol.converged() { 1.0 } else { 0.0 });
    row.value("damping", sol.damping);
    row.value("trend_decreasing", if sol.trend_decreasing { 1.0 } else { 0.0 });
    row.message = sol.diagnosis.clone();
    row.status = match sol.status {
        MfgStatus::BlowUp => RunStatus::BlowUp,
        MfgStatus::Failed => RunStatus::Failed,
        _ => RunStatus::Ok,
    };
    if !matches!(sol.status, MfgStatus::Converged | MfgStatus::MaxIterations) {
        return Ok(row);
    }
    let mass = sol.m.slices.iter().map(|s| (s.integral() - 1.0).abs()).fold(0.0, f64::max);
    row.value("mass_drift", mass);
    row.value("min_m", sol.m.min());
    row.value("min_u", sol.u.min());
    let fo = monitor_first_order(sol, problem)?;
    row.value("gradient_energy", fo.gradient_energy);
    row.value("density_energy", fo.density_energy);
    row.value("identity_defect", fo.identity_defect);
    let so = monitor_second_order(sol, problem)?;
    row.value("hessian_energy", so.hessian_energy);
    row.value("density_gradient_energy", so.density_gradient_energy);
    let ir = check_m_integrability(sol, problem, mu, p)?;
    row.value("integrability_p", ir.p);
    row.value("integrability_hypothesis", ir.hypothesis);
    row.value("integrability_ratio", ir.ratio);
    let (lhs, rhs) = gnct_sides(sol, problem)?;
    row.value("gnct_density", lhs);
    row.value("gnct_drift", rhs);
    if let Some(s) = spectral_tail_slope(sol.u.last()) {
        row.value("tail_slope_u", s);
    }
    if let Some(s) = spectral_tail_slope(sol.m.last()) {
        row.value("tail_slope_m", s);
    }
    Ok(row)
}

fn run_mfg(cfg: &RunConfig, book: &ExponentBook) -> Result<Execution> {
    let m = &cfg.mfg;
    let coupling = Coupling::new(m.coupling, m.r, m.strength)?;
    let mu = m.mu.unwrap_or(2.0);
    let mut rec = ExperimentRecord::new(
        "mfg",
        Some(*book),
        format!("coupling={:?};r={};amplitudes={:?}", m.coupling, m.r, m.terminal_amplitudes),
    );
    let mut slabs = Vec::new();
    let mut runs = Vec::new();
    let below = m.r < coupling.threshold(book.d, book.gamma);
    for (i, &a) in m.terminal_amplitudes.iter().enumerate() {
        let problem = mfg_setup(cfg, a).problem(coupling)?;
        let sol = solve_mfg(&problem, &cfg.solver)?;
        let row = mfg_row(i, cfg.seed, a, &sol, &problem, mu, m.p)?;
        let conv = Verdict::flag(&format!("converged_a{i}"), sol.converged());
        rec.verdicts.push(if below { conv } else { conv.documented() });
        if let Some(&defect) = row.values.get("identity_defect") {
            let v = Verdict::at_most(&format!("identity_defect_a{i}"), defect, cfg.tolerances.identity_defect);
            rec.verdicts.push(if below && sol.converged() { v } else { v.documented() });
            let finite = row.values.values().all(|v| v.is_finite());
            rec.verdicts.push(Verdict::flag(&format!("monitors_finite_a{i}"), finite));
        }
        if m.coupling == CouplingKind::Monotone && sol.converged() {
            // u(t) ≥ min u_T for g ≥ 0 and H(x,0) = 0
            let bound = problem.u_terminal.min() - 1e-6;
            rec.verdicts.push(Verdict::at_least(&format!("comparison_a{i}"), sol.u.min() - bound, 0.0));
        }
        if i == 0 {
            if m.uniqueness && m.coupling == CouplingKind::Monotone && sol.converged() {
                let other = MfgOptions {
                    initial: match cfg.solver.initial {
                        InitialGuess::Datum => InitialGuess::Uniform,
                        InitialGuess::Uniform => InitialGuess::Datum,
                    },
                    ..cfg.solver.clone()
                };
                let sol2 = solve_mfg(&problem, &other)?;
                let diff = lq_spacetime_norm(&sol.m.sub(&sol2.m), 1.0)?;
                rec.ratio("uniqueness_l1", diff);
                rec.verdicts.push(Verdict::at_most("uniqueness", diff, 10.0 * cfg.solver.tol));
            }
            if cfg.output.slabs {
                slabs.push(("u".to_string(), sol.u.clone()));
                slabs.push(("m".to_string(), sol.m.clone()));
            }
        }
        rec.rows.push(row);
        runs.push((sol, problem));
    }
    if runs.len() >= 2 {
        let all_converged = runs.iter().all(|(s, _)| s.converged());
        if all_converged {
            let rep = check_gnct(&runs)?;
            let slope = rep.delta_hat.unwrap_or(f64::INFINITY);
            rec.ratio("delta_hat", slope);
            let v = Verdict::at_most("gnct_delta_hat", slope, 1.0);
            rec.verdicts.push(if rep.asserted { v } else { v.documented() });
        } else {
            rec.notes.push("exponent fit skipped: not every amplitude converged".into());
        }
    }
    if !below {
        rec.notes.push(format!("r = {} is not below the threshold: convergence is recorded without verdict", m.r));
    }
    Ok(Execution { record: rec, slabs })
}
