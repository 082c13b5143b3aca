//! Exponents and thresholds derived from `(d, γ, q)`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Hölder exponent used when the explicit formula does not apply.
pub const ALPHA_UPPER_BRANCH: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HolderBranch {
    /// `α = γ′ − (d+2)/q`.
    Formula,
    /// `q ≥ (d+2)/(γ′−1)`: any `α ∈ (0,1)`, fixed to [`ALPHA_UPPER_BRANCH`].
    Free,
    /// `q ≤ (d+2)/γ′`: no exponent.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Below,
    At,
    Above,
}

/// All exponents entering the estimates for one `(d, γ, q)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentBook {
    pub d: usize,
    pub gamma: f64,
    pub q: f64,
    pub gamma_conj: f64,
    pub q_crit_sub: f64,
    pub q_crit_super: f64,
    #[serde(with = "crate::serde_f64")]
    pub p_dual: f64,
    pub alpha_pred: Option<f64>,
    pub holder_branch: HolderBranch,
    #[serde(with = "crate::serde_f64")]
    pub r_max_monotone: f64,
    #[serde(with = "crate::serde_f64")]
    pub r_max_focusing: f64,
}

impl ExponentBook {
    pub fn new(d: usize, gamma: f64, q: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(LabError::param("d", format!("{d} not in 1..=3")));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(LabError::param("gamma", format!("{gamma} must exceed 1")));
        }
        if !(q >= 1.0) {
            return Err(LabError::param("q", format!("{q} must be >= 1")));
        }
        let df = d as f64;
        let gc = conjugate(gamma);
        let q_crit_sub = (df + 2.0) * (gamma - 1.0) / gamma;
        let (alpha_pred, holder_branch) = holder_exponent(df, gc, q, q_crit_sub);
        Ok(ExponentBook {
            d,
            gamma,
            q,
            gamma_conj: gc,
            q_crit_sub,
            q_crit_super: (df + 2.0) * (gamma - 1.0) / 2.0,
            p_dual: p_dual(d, q),
            alpha_pred,
            holder_branch,
            r_max_monotone: r_max_monotone(d, gamma),
            r_max_focusing: r_max_focusing(d, gamma),
        })
    }

    /// Maximal-regularity threshold for the active branch.
    pub fn q_threshold(&self) -> f64 {
        if self.gamma < 2.0 {
            self.q_crit_sub
        } else {
            self.q_crit_super
        }
    }

    pub fn regime(&self) -> Regime {
        classify(self.q, self.q_threshold())
    }

    /// `m′(σ) = 1 + (d+2)/σ`.
    pub fn m_prime(&self, sigma: f64) -> f64 {
        1.0 + (self.d as f64 + 2.0) / sigma
    }

    /// Integrability exponent of the stability estimate, `d(γ−1)/(2−γ)` for `γ < 2`.
    pub fn p_stability(&self) -> Option<f64> {
        (self.gamma < 2.0).then(|| self.d as f64 * (self.gamma - 1.0) / (2.0 - self.gamma))
    }

    /// Lower end of the sub-quadratic maximal-regularity range, `1 + 2/(d+2)`.
    pub fn gamma_lower_maxreg(&self) -> f64 {
        1.0 + 2.0 / (self.d as f64 + 2.0)
    }

    /// Lower end of the MFG existence range, `1 + 1/(d+1)`.
    pub fn gamma_lower_mfg(&self) -> f64 {
        1.0 + 1.0 / (self.d as f64 + 1.0)
    }
}

pub fn conjugate(gamma: f64) -> f64 {
    gamma / (gamma - 1.0)
}

fn classify(q: f64, threshold: f64) -> Regime {
    let tol = 1e-12 * threshold.abs().max(1.0);
    if (q - threshold).abs() <= tol {
        Regime::At
    } else if q > threshold {
        Regime::Above
    } else {
        Regime::Below
    }
}

fn holder_exponent(df: f64, gc: f64, q: f64, q_crit_sub: f64) -> (Option<f64>, HolderBranch) {
    if q <= q_crit_sub {
        return (None, HolderBranch::None);
    }
    if q < (df + 2.0) / (gc - 1.0) {
        (Some(gc - (df + 2.0) / q), HolderBranch::Formula)
    } else {
        (Some(ALPHA_UPPER_BRANCH), HolderBranch::Free)
    }
}

/// `p = dq/((d+2) − 2q)` for `q < (d+2)/2`, else `∞`.
pub fn p_dual(d: usize, q: f64) -> f64 {
    let df = d as f64;
    if q < (df + 2.0) / 2.0 {
        df * q / ((df + 2.0) - 2.0 * q)
    } else {
        f64::INFINITY
    }
}

/// Largest monotone coupling growth with existence; `∞` when `d ≤ 2`.
pub fn r_max_monotone(d: usize, gamma: f64) -> f64 {
    if d <= 2 {
        return f64::INFINITY;
    }
    let df = d as f64;
    let gc = conjugate(gamma);
    if gamma <= 2.0 {
        gc / (df - 2.0) * df / (df + 2.0 - gc)
    } else {
        2.0 / (df * (gamma - 1.0) - 2.0)
    }
}

/// Largest focusing coupling growth with existence.
pub fn r_max_focusing(d: usize, gamma: f64) -> f64 {
    let df = d as f64;
    if gamma <= 2.0 {
        conjugate(gamma) / df
    } else {
        2.0 / ((df + 2.0) * (gamma - 1.0) - 2.0)
    }
}

/// Integrability gained by the density under the divergence hypothesis:
/// `d(μ−1)/(d(μ−1)−2)` when `d > 2`; `None` means any finite exponent.
pub fn density_exponent(d: usize, mu: f64) -> Option<f64> {
    if d > 2 {
        let a = d as f64 * (mu - 1.0);
        Some(a / (a - 2.0))
    } else {
        None
    }
}

/// Dual exponent `σ = σ′/(σ′−1)`.
pub fn holder_dual(s: f64) -> f64 {
    s / (s - 1.0)
}
