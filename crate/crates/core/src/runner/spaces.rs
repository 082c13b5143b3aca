//! Self-test of the function-space toolkit: random ensembles for the
//! interpolation inequalities plus single-mode closed forms.

use std::f64::consts::PI;

use crate::error::Result;
use crate::grid::{Field, TorusGrid};
use crate::interpolation::{
    check_gagliardo_nirenberg, check_miranda_nirenberg, check_nikolskii_embedding, gn_identity_residual, gn_solve_s,
    mn_identity_residual, mn_solve_theta, run_ensemble, EnsembleSummary, IDENTITY_TOL,
};
use crate::lab::{ExperimentRecord, RunRow, Verdict};
use crate::norms::{holder_seminorm, lp_norm, nikolskii_seminorm, w2q_norm};

/// Relative tolerance for the single-mode anchors.
pub const ANCHOR_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
pub struct SpacesSetup {
    pub members: usize,
    pub seed: u64,
}

impl Default for SpacesSetup {
    fn default() -> Self {
        SpacesSetup { members: 100, seed: 0 }
    }
}

/// `‖cos(2πk·)‖_{L^p(𝕋)} = (Γ((p+1)/2) / (√π Γ(p/2+1)))^{1/p}`, independent of `k`.
pub fn cosine_lp(p: f64) -> f64 {
    (libm::tgamma((p + 1.0) / 2.0) / (PI.sqrt() * libm::tgamma(p / 2.0 + 1.0))).powf(1.0 / p)
}

/// `sup_{0<h≤1/2} 2|sin(πkh)| / h^α`, the Hölder quotient of a unit mode.
pub fn mode_increment_sup(k: f64, alpha: f64) -> f64 {
    let m = 200_000;
    (1..=m)
        .map(|i| {
            let h = 0.5 * i as f64 / m as f64;
            2.0 * (PI * k * h).sin().abs() / h.powf(alpha)
        })
        .fold(0.0, f64::max)
}

fn ensemble_row(rec: &mut ExperimentRecord, rung: usize, seed: u64, d: usize, summary: &EnsembleSummary, params: &[(&str, f64)]) {
    let mut row = RunRow::new(rung, seed).param("d", d as f64);
    for (k, v) in params {
        row = row.param(k, *v);
    }
    row.value("members", summary.members as f64);
    row.value("degenerate", summary.degenerate as f64);
    row.value("min", summary.min);
    row.value("max", summary.max);
    row.value("mean", summary.mean);
    row.message = summary.label.clone();
    rec.verdicts.push(Verdict::flag(&format!("{}_rung{rung}_bounded", summary.label), summary.bounded()));
    rec.rows.push(row);
}

fn anchor(rec: &mut ExperimentRecord, rung: usize, label: &str, measured: f64, exact: f64) {
    let rel = (measured / exact - 1.0).abs();
    let mut row = RunRow::new(rung, 0);
    row.value("measured", measured);
    row.value("closed_form", exact);
    row.value("relative_error", rel);
    row.message = label.into();
    rec.rows.push(row);
    rec.verdicts.push(Verdict::at_most(&format!("anchor_{label}"), rel, ANCHOR_TOL));
}

/// Gagliardo-Nirenberg, Miranda-Nirenberg and Nikol'skii ensembles with the
/// exponent identities enforced, then closed-form anchors on `cos(2πkx)`.
pub fn verify_spaces(setup: &SpacesSetup) -> Result<ExperimentRecord> {
    let mut rec = ExperimentRecord::new("verify_spaces", None, format!("members={}", setup.members));
    let seed = setup.seed;
    let mut rung = 0;

    let grids = [(1usize, 128usize, 6i64), (2, 32, 3)];
    for (gi, &(d, n, modes)) in grids.iter().enumerate() {
        let grid = TorusGrid::new(d, n, 1.0, 1)?;
        let stream = seed.wrapping_add(1000 * gi as u64);
        let (gamma, q, theta) = if d == 1 { (1.5, 2.0, 0.5) } else { (3.0, 3.0, 0.7) };
        let s = gn_solve_s(d, gamma, q, theta)?;
        let res = gn_identity_residual(d, gamma, q, s, theta);
        rec.verdicts.push(Verdict::at_most(&format!("gn_identity_d{d}"), res.abs(), IDENTITY_TOL));
        let sum = run_ensemble(grid, setup.members, modes, stream, |u| check_gagliardo_nirenberg(u, gamma, q, s, theta))?;
        ensemble_row(&mut rec, rung, stream, d, &sum, &[("gamma", gamma), ("q", q), ("s", s), ("theta", theta)]);
        rung += 1;

        let (gamma, q, alpha) = if d == 1 { (3.0, 4.0, 0.75) } else { (4.0, 9.0, 8.0 / 9.0) };
        let theta = mn_solve_theta(d, gamma, q, alpha);
        let res = mn_identity_residual(d, gamma, q, alpha, theta);
        rec.verdicts.push(Verdict::at_most(&format!("mn_identity_d{d}"), res.abs(), IDENTITY_TOL));
        let sum =
            run_ensemble(grid, setup.members, modes, stream + 1, |u| check_miranda_nirenberg(u, gamma, q, alpha, theta))?;
        ensemble_row(&mut rec, rung, stream + 1, d, &sum, &[("gamma", gamma), ("q", q), ("alpha", alpha), ("theta", theta)]);
        rung += 1;

        let (alpha, p) = if d == 1 { (0.5, 2.0) } else { (0.3, 4.0) };
        let sum = run_ensemble(grid, setup.members, modes, stream + 2, |u| check_nikolskii_embedding(u, alpha, p))?;
        ensemble_row(&mut rec, rung, stream + 2, d, &sum, &[("alpha", alpha), ("p", p)]);
        rung += 1;
    }

    let grid = TorusGrid::new(1, 256, 1.0, 1)?;
    let k = 3.0;
    let u = Field::from_fn(grid, |x| (2.0 * PI * k * x[0]).cos());
    let w = 2.0 * PI * k;
    anchor(&mut rec, rung, "lp3", lp_norm(&u, 3.0)?, cosine_lp(3.0));
    anchor(&mut rec, rung + 1, "w2q2", w2q_norm(&u, 2.0)?, cosine_lp(2.0) * (1.0 + w * w + w.powi(4)).sqrt());
    anchor(&mut rec, rung + 2, "holder_half", holder_seminorm(&u, 0.5)?, mode_increment_sup(k, 0.5));
    anchor(
        &mut rec,
        rung + 3,
        "nikolskii_half_l2",
        nikolskii_seminorm(&u, 0.5, 2.0)?,
        cosine_lp(2.0) * mode_increment_sup(k, 0.5),
    );
    Ok(rec)
}
