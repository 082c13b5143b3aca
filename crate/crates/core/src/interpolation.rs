//! Interpolation and embedding inequalities as measurable ratios.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{Field, TorusGrid};
use crate::norms::{holder_norm, lp_norm, nikolskii_seminorm, sobolev_slobodeckii_norm, w2q_norm};
use crate::spectral;

/// Tolerance on exponent identities.
pub const IDENTITY_TOL: f64 = 1e-10;

/// `LHS / RHS` of an inequality whose constant is unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `None` when both sides vanish.
    pub ratio: Option<f64>,
    pub exponents: Vec<(String, f64)>,
}

impl RatioReport {
    pub fn new(label: &str, lhs: f64, rhs: f64, exponents: &[(&str, f64)]) -> Self {
        let ratio = if rhs > 0.0 {
            Some(lhs / rhs)
        } else if lhs == 0.0 {
            None
        } else {
            Some(f64::INFINITY)
        };
        RatioReport {
            label: label.into(),
            lhs,
            rhs,
            ratio,
            exponents: exponents.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.ratio.is_none()
    }
}

/// Residual of `1/(γq) = 1/d + θ(1/q − 2/d) + (1−θ)/s`.
pub fn gn_identity_residual(d: usize, gamma: f64, q: f64, s: f64, theta: f64) -> f64 {
    let df = d as f64;
    1.0 / (gamma * q) - (1.0 / df + theta * (1.0 / q - 2.0 / df) + (1.0 - theta) / s)
}

/// The `s` that closes the Gagliardo-Nirenberg identity for given `θ < 1`.
pub fn gn_solve_s(d: usize, gamma: f64, q: f64, theta: f64) -> Result<f64> {
    let df = d as f64;
    let rest = 1.0 / (gamma * q) - 1.0 / df - theta * (1.0 / q - 2.0 / df);
    if !(theta < 1.0) || rest <= 0.0 {
        return Err(LabError::param("theta", "no admissible s for this theta"));
    }
    Ok((1.0 - theta) / rest)
}

/// Residual of `1/(γq) = 1/d + θ(1/q − 2/d) − (1−θ)α/d`.
pub fn mn_identity_residual(d: usize, gamma: f64, q: f64, alpha: f64, theta: f64) -> f64 {
    let df = d as f64;
    1.0 / (gamma * q) - (1.0 / df + theta * (1.0 / q - 2.0 / df) - (1.0 - theta) * alpha / df)
}

/// `θ` closing the Miranda-Nirenberg identity.
pub fn mn_solve_theta(d: usize, gamma: f64, q: f64, alpha: f64) -> f64 {
    let df = d as f64;
    (1.0 / (gamma * q) - (1.0 - alpha) / df) / (1.0 / q - (2.0 - alpha) / df)
}

fn enforce(name: &str, residual: f64) -> Result<()> {
    if residual.abs() > IDENTITY_TOL {
        return Err(LabError::param(name, format!("exponent identity off by {residual:.3e}")));
    }
    Ok(())
}

/// `‖Du‖_{L^{γq}} / (‖u‖^θ_{W^{2,q}} ‖u‖^{1−θ}_{L^s})`.
pub fn check_gagliardo_nirenberg(u: &Field, gamma: f64, q: f64, s: f64, theta: f64) -> Result<RatioReport> {
    enforce("gagliardo-nirenberg", gn_identity_residual(u.grid.d, gamma, q, s, theta))?;
    let lhs = lp_norm(&spectral::gradient(u)?.magnitude(), gamma * q)?;
    let rhs = w2q_norm(u, q)?.powf(theta) * lp_norm(u, s)?.powf(1.0 - theta);
    Ok(RatioReport::new(
        "gagliardo_nirenberg",
        lhs,
        rhs,
        &[("gamma", gamma), ("q", q), ("s", s), ("theta", theta)],
    ))
}

/// `‖Du‖_{L^{γq}} / (‖u‖^θ_{W^{2,q}} ‖u‖^{1−θ}_{C^α})`.
pub fn check_miranda_nirenberg(u: &Field, gamma: f64, q: f64, alpha: f64, theta: f64) -> Result<RatioReport> {
    enforce("miranda-nirenberg", mn_identity_residual(u.grid.d, gamma, q, alpha, theta))?;
    let lhs = lp_norm(&spectral::gradient(u)?.magnitude(), gamma * q)?;
    let rhs = w2q_norm(u, q)?.powf(theta) * holder_norm(u, alpha)?.powf(1.0 - theta);
    Ok(RatioReport::new(
        "miranda_nirenberg",
        lhs,
        rhs,
        &[("gamma", gamma), ("q", q), ("alpha", alpha), ("theta", theta)],
    ))
}

/// `[u]_{N^{α,p}} / ‖u‖_{W^{α,p}}`.
pub fn check_nikolskii_embedding(u: &Field, alpha: f64, p: f64) -> Result<RatioReport> {
    let lhs = nikolskii_seminorm(u, alpha, p)?;
    let rhs = sobolev_slobodeckii_norm(u, alpha, p)?;
    Ok(RatioReport::new("nikolskii_embedding", lhs, rhs, &[("alpha", alpha), ("p", p)]))
}

/// Deterministic generator for ensemble member `member`.
pub fn member_rng(seed: u64, member: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member);
    rng
}

/// Random real trigonometric polynomial with modes `|k_a| ≤ max_mode`.
pub fn random_trig_polynomial(grid: TorusGrid, max_mode: i64, rng: &mut impl Rng) -> Field {
    let terms = rng.random_range(1..=6usize);
    let mut spec = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut k: Vec<i64> = (0..grid.d).map(|_| rng.random_range(-max_mode..=max_mode)).collect();
        if k.iter().all(|&v| v == 0) {
            k[0] = rng.random_range(1..=max_mode);
        }
        let amp = rng.random_range(-1.0..1.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        spec.push((k, amp, phase));
    }
    Field::from_fn(grid, |x| {
        spec.iter()
            .map(|(k, a, ph)| {
                let arg: f64 = k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum();
                a * (2.0 * PI * arg + ph).cos()
            })
            .sum()
    })
}

/// Extremes of a ratio over an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub label: String,
    pub members: usize,
    pub degenerate: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl EnsembleSummary {
    pub fn bounded(&self) -> bool {
        self.max.is_finite() && self.members > self.degenerate
    }
}

/// Evaluate `check` on `members` random trig polynomials; the output is
/// independent of thread scheduling.
pub fn run_ensemble<F>(
    grid: TorusGrid,
    members: usize,
    max_mode: i64,
    seed: u64,
    check: F,
) -> Result<EnsembleSummary>
where
    F: Fn(&Field) -> Result<RatioReport> + Sync,
{
    let reports: Vec<RatioReport> = (0..members)
        .into_par_iter()
        .map(|m| {
            let mut rng = member_rng(seed, m as u64);
            check(&random_trig_polynomial(grid, max_mode, &mut rng))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = reports.iter().filter_map(|r| r.ratio).collect();
    let label = reports.first().map(|r| r.label.clone()).unwrap_or_default();
    if ratios.is_empty() {
        return Err(LabError::Degenerate(format!("{label}: every member degenerate")));
    }
    Ok(EnsembleSummary {
        label,
        members,
        degenerate: members - ratios.len(),
        min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max: ratios.iter().copied().fold(0.0, f64::max),
        mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
    })
}
