//! Discrete norms and seminorms on the torus lattice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{Field, SpaceTimeField, TorusGrid};
use crate::spectral::{self, wavenumber};

/// A measured norm with the exponents that define it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub label: String,
    pub value: f64,
    pub parameters: Vec<(String, f64)>,
}

impl NormReport {
    pub fn new(label: &str, value: f64, parameters: &[(&str, f64)]) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(LabError::NonFinite(format!("norm {label} = {value}")));
        }
        Ok(NormReport {
            label: label.to_string(),
            value,
            parameters: parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(LabError::param(name, format!("{p} must be >= 1")));
    }
    Ok(())
}

/// `(Σ |v|^p w)^{1/p}` with the max factored out to avoid overflow at large `p`.
fn weighted_p_sum(values: &[f64], p: f64, weight: f64) -> f64 {
    let m = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * (s * weight).powf(1.0 / p)
}

/// `‖u‖_{L^p(𝕋^d)}`; `p = ∞` is the lattice maximum.
pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    if p.is_infinite() {
        return Ok(u.max_abs());
    }
    Ok(weighted_p_sum(&u.values, p, u.grid.cell_volume()))
}

/// `‖u‖_{L^q(Q_T)}`: trapezoid in time, lattice sum in space.
pub fn lq_spacetime_norm(u: &SpaceTimeField, q: f64) -> Result<f64> {
    check_exponent("q", q)?;
    if q.is_infinite() {
        return Ok(u.max_abs());
    }
    let m = u.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let vol = u.grid.cell_volume();
    let per: Vec<f64> = u
        .slices
        .iter()
        .map(|s| s.values.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>() * vol)
        .collect();
    Ok(m * crate::grid::trapezoid(&per, u.grid.dt()).powf(1.0 / q))
}

/// Second-order time derivative of the slice sequence, one-sided at the ends.
pub fn time_derivative(u: &SpaceTimeField) -> Result<SpaceTimeField> {
    let nt = u.grid.nt;
    if nt < 2 {
        return Err(LabError::param("nt", "time derivative needs nt >= 2"));
    }
    let h = u.grid.dt();
    let s = &u.slices;
    let mut out = Vec::with_capacity(nt + 1);
    out.push(
        s[0].zip_map(&s[1], |a, b| 4.0 * b - 3.0 * a)
            .zip_map(&s[2], |ab, c| (ab - c) / (2.0 * h)),
    );
    for j in 1..nt {
        out.push(s[j + 1].zip_map(&s[j - 1], |a, b| (a - b) / (2.0 * h)));
    }
    out.push(
        s[nt].zip_map(&s[nt - 1], |a, b| 3.0 * a - 4.0 * b)
            .zip_map(&s[nt - 2], |ab, c| (ab + c) / (2.0 * h)),
    );
    SpaceTimeField::new(u.grid, out)
}

/// Component norms entering the parabolic Sobolev norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W21qParts {
    pub u: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub dt: f64,
    pub total: f64,
}

/// `‖u‖_{W^{2,1}_q(Q_T)}` as the ℓ^q aggregate of the space-time norms of
/// `u`, `∂_i u`, `∂_i∂_j u` (i ≤ j) and `∂_t u`.
pub fn w21q_parts(u: &SpaceTimeField, q: f64) -> Result<W21qParts> {
    check_exponent("q", q)?;
    let g = u.grid;
    let d = g.d;
    let ut = time_derivative(u)?;
    let derived: Vec<(Vec<crate::Field>, Vec<Vec<crate::Field>>)> = u
        .slices
        .par_iter()
        .map(|s| {
            let grad = spectral::gradient(s)?.components;
            let hess = spectral::hessian(s)?;
            Ok((grad, hess))
        })
        .collect::<Result<_>>()?;
    let collect = |pick: &dyn Fn(usize) -> crate::Field| -> Result<f64> {
        let slices = (0..=g.nt).map(pick).collect();
        lq_spacetime_norm(&SpaceTimeField::new(g, slices)?, q)
    };
    let mut first = Vec::new();
    for a in 0..d {
        first.push(collect(&|j| derived[j].0[a].clone())?);
    }
    let mut second = Vec::new();
    for i in 0..d {
        for k in i..d {
            second.push(collect(&|j| derived[j].1[i][k].clone())?);
        }
    }
    let u0 = lq_spacetime_norm(u, q)?;
    let dtn = lq_spacetime_norm(&ut, q)?;
    let total = aggregate(
        std::iter::once(u0).chain(first.iter().copied()).chain(second.iter().copied()).chain([dtn]),
        q,
    );
    Ok(W21qParts { u: u0, first, second, dt: dtn, total })
}

pub fn w21q_norm(u: &SpaceTimeField, q: f64) -> Result<f64> {
    Ok(w21q_parts(u, q)?.total)
}

fn aggregate(terms: impl Iterator<Item = f64>, q: f64) -> f64 {
    let v: Vec<f64> = terms.collect();
    if q.is_infinite() {
        return v.iter().fold(0.0, |m: f64, x| m.max(*x));
    }
    weighted_p_sum(&v, q, 1.0)
}

/// `‖u‖_{W^{2,q}(𝕋^d)}`: ℓ^q aggregate of `u`, `∂_i u`, `∂_i∂_j u` (i ≤ j).
pub fn w2q_norm(u: &Field, q: f64) -> Result<f64> {
    check_exponent("q", q)?;
    let d = u.grid.d;
    let grad = spectral::gradient(u)?;
    let hess = spectral::hessian(u)?;
    let mut terms = vec![lp_norm(u, q)?];
    for c in &grad.components {
        terms.push(lp_norm(c, q)?);
    }
    for i in 0..d {
        for k in i..d {
            terms.push(lp_norm(&hess[i][k], q)?);
        }
    }
    Ok(aggregate(terms.into_iter(), q))
}

/// Every nonzero lattice offset with components in `(−n/2, n/2]`, paired with
/// its geodesic length.
pub fn lattice_offsets(grid: &TorusGrid) -> Vec<(Vec<i64>, f64)> {
    let dx = grid.dx();
    (1..grid.points())
        .map(|idx| {
            let mi = grid.multi_index(idx);
            let xi: Vec<i64> = (0..grid.d).map(|a| wavenumber(mi[a], grid.n)).collect();
            let dist = xi.iter().map(|&k| (k as f64 * dx).powi(2)).sum::<f64>().sqrt();
            (xi, dist)
        })
        .collect()
}

/// `|u(x) − u(x − ξ)|` over the lattice.
pub fn increment(u: &Field, xi: &[i64]) -> Field {
    let s = spectral::shift(u, xi);
    u.zip_map(&s, |a, b| (a - b).abs())
}

/// `sup_{ξ≠0} ‖u − u(· − ξ)‖_∞ / dist(ξ)^α` over all lattice offsets.
pub fn holder_seminorm(u: &Field, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LabError::param("alpha", format!("{alpha} not in (0,1]")));
    }
    u.check_finite("holder input")?;
    let offs = lattice_offsets(&u.grid);
    Ok(offs
        .par_iter()
        .map(|(xi, dist)| increment(u, xi).max() / dist.powf(alpha))
        .reduce(|| 0.0, f64::max))
}

/// `‖u‖_∞ + [u]_α`.
pub fn holder_norm(u: &Field, alpha: f64) -> Result<f64> {
    Ok(u.max_abs() + holder_seminorm(u, alpha)?)
}

/// `sup_{ξ≠0} dist(ξ)^{−μ} ‖u − u(· − ξ)‖_{L^p}` over all lattice offsets.
pub fn nikolskii_seminorm(u: &Field, mu: f64, p: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(LabError::param("mu", format!("{mu} not in (0,1)")));
    }
    check_exponent("p", p)?;
    u.check_finite("nikolskii input")?;
    let offs = lattice_offsets(&u.grid);
    offs.par_iter()
        .map(|(xi, dist)| Ok(lp_norm(&increment(u, xi), p)? / dist.powf(mu)))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Slobodeckii seminorm `(∬ |u(x+h) − u(x)|^p / |h|^{d+sp} dh dx)^{1/p}`, `s ∈ (0,1)`,
/// with `h` ranging over the lattice minus the origin.
pub fn slobodeckii_seminorm(u: &Field, s: f64, p: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(LabError::param("s", format!("{s} not in (0,1)")));
    }
    check_exponent("p", p)?;
    if p.is_infinite() {
        return Err(LabError::param("p", "finite exponent required"));
    }
    let g = u.grid;
    let vol = g.cell_volume();
    let offs = lattice_offsets(&g);
    let m = u.max() - u.min();
    if m == 0.0 {
        return Ok(0.0);
    }
    let total: f64 = offs
        .par_iter()
        .map(|(xi, dist)| {
            let inc = increment(u, xi);
            let s_inc: f64 = inc.values.iter().map(|v| (v / m).powf(p)).sum();
            s_inc * vol / dist.powf(g.d as f64 + s * p)
        })
        .sum();
    Ok(m * (total * vol).powf(1.0 / p))
}

/// `‖u‖_{W^{s,p}}` for `s ∈ (0,2)` non-integer, Slobodeckii realization.
/// `s = 0` is accepted as `L^p` (the endpoint of the initial-datum scale at q = 1).
pub fn sobolev_slobodeckii_norm(u: &Field, s: f64, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    if s == 0.0 {
        return lp_norm(u, p);
    }
    if !(s > 0.0 && s < 2.0) || s == 1.0 {
        return Err(LabError::param("s", format!("{s} must lie in (0,1) ∪ (1,2)")));
    }
    if s < 1.0 {
        return Ok(lp_norm(u, p)? + slobodeckii_seminorm(u, s, p)?);
    }
    let grad = spectral::gradient(u)?;
    let mut total = lp_norm(u, p)?;
    for c in &grad.components {
        total += lp_norm(c, p)? + slobodeckii_seminorm(c, s - 1.0, p)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n, 1.0, 1).unwrap()
    }

    #[test]
    fn lp_of_constants_and_sine() {
        let g = TorusGrid::new(2, 16, 1.0, 1).unwrap();
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_norm(&Field::constant(g, -2.5), p).unwrap() - 2.5).abs() < 1e-12);
        }
        let g = g1(64);
        let u = Field::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        assert!((lp_norm(&u, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
        let v = Field::from_fn(g, |x| 3.0 * (2.0 * PI * x[0]).cos());
        assert!((lp_norm(&v, f64::INFINITY).unwrap() - 3.0).abs() < 1e-12);
        assert!(lp_norm(&v, 0.5).is_err());
    }

    #[test]
    fn large_p_does_not_overflow() {
        let u = Field::constant(g1(8), 1e200);
        assert!((lp_norm(&u, 8.0).unwrap() / 1e200 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spacetime_norms() {
        let g = TorusGrid::new(1, 8, 1.0, 64).unwrap();
        assert!((lq_spacetime_norm(&SpaceTimeField::constant(g, 1.0), 3.0).unwrap() - 1.0).abs() < 1e-12);
        let t = SpaceTimeField::from_fn(g, |_, t| t);
        assert!((lq_spacetime_norm(&t, 1.0).unwrap() - 0.5).abs() < 1e-6);
        assert_eq!(lq_spacetime_norm(&SpaceTimeField::zeros(g), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn w21q_static_cosine() {
        let g = TorusGrid::new(1, 32, 1.0, 4).unwrap();
        let u = SpaceTimeField::from_fn(g, |x, _| (2.0 * PI * x[0]).cos());
        let expected = (0.5 + 2.0 * PI * PI + 8.0 * PI.powi(4)).sqrt();
        assert!((w21q_norm(&u, 2.0).unwrap() - expected).abs() < 1e-9);
        assert_eq!(w21q_norm(&SpaceTimeField::zeros(g), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn w21q_heat_solution_against_quadrature() {
        // e^{−λt}cos(2πx), λ = 4π²: every term is ‖cos‖_2 · c · (∫_0^1 e^{−2λt})^{1/2}
        let lam = 4.0 * PI * PI;
        let g = TorusGrid::new(1, 64, 1.0, 512).unwrap();
        let u = SpaceTimeField::from_fn(g, |x, t| (-lam * t).exp() * (2.0 * PI * x[0]).cos());
        let time_l2 = ((1.0 - (-2.0 * lam).exp()) / (2.0 * lam)).sqrt();
        let sq = 0.5f64.sqrt() * time_l2;
        let coeffs = [1.0, 2.0 * PI, lam, lam];
        let oracle = coeffs.iter().map(|c| (c * sq).powi(2)).sum::<f64>().sqrt();
        let got = w21q_norm(&u, 2.0).unwrap();
        assert!((got / oracle - 1.0).abs() < 0.02, "{got} vs {oracle}");
    }

    #[test]
    fn holder_lipschitz_of_abs_sine() {
        let g = g1(256);
        let u = Field::from_fn(g, |x| (PI * x[0]).sin().abs());
        let v = holder_seminorm(&u, 1.0).unwrap();
        assert!((v / PI - 1.0).abs() < 0.05, "{v}");
        assert_eq!(holder_seminorm(&Field::constant(g, 2.0), 0.5).unwrap(), 0.0);
        let a = holder_seminorm(&u, 0.4).unwrap();
        let b = holder_seminorm(&u.scale(-3.0), 0.4).unwrap();
        assert!((b - 3.0 * a).abs() <= 1e-12 * b);
        assert!(holder_seminorm(&u, 1.5).is_err());
    }

    #[test]
    fn nikolskii_cosine_against_dense_shift_oracle() {
        // ‖cos(2π(·+h)) − cos(2π·)‖_2 = √2 |sin(πh)|
        let oracle = (1..=500_000)
            .map(|i| {
                let h = i as f64 * 1e-6;
                2f64.sqrt() * (PI * h).sin() / h.sqrt()
            })
            .fold(0.0, f64::max);
        let u = Field::from_fn(g1(256), |x| (2.0 * PI * x[0]).cos());
        let v = nikolskii_seminorm(&u, 0.5, 2.0).unwrap();
        assert!((v / oracle - 1.0).abs() < 0.05, "{v} vs {oracle}");
        assert_eq!(nikolskii_seminorm(&Field::constant(g1(16), 1.0), 0.5, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn slobodeckii_half_cosine_against_kernel_quadrature() {
        // [cos]^2_{1/2,2} = ∫_{−1/2}^{1/2} 2 sin²(πh)/h² dh
        let m = 2_000_000;
        let h = 0.5 / m as f64;
        let integral: f64 = 2.0
            * (0..m)
                .map(|i| {
                    let x = (i as f64 + 0.5) * h;
                    2.0 * (PI * x).sin().powi(2) / (x * x) * h
                })
                .sum::<f64>();
        let oracle = 0.5f64.sqrt() + integral.sqrt();
        let u = Field::from_fn(g1(256), |x| (2.0 * PI * x[0]).cos());
        let v = sobolev_slobodeckii_norm(&u, 0.5, 2.0).unwrap();
        assert!((v / oracle - 1.0).abs() < 0.10, "{v} vs {oracle}");
    }

    #[test]
    fn slobodeckii_rejects_integers_and_handles_constants() {
        let g = g1(16);
        let u = Field::constant(g, 1.5);
        assert!(sobolev_slobodeckii_norm(&u, 1.0, 2.0).is_err());
        assert!(sobolev_slobodeckii_norm(&u, 2.0, 2.0).is_err());
        assert!((sobolev_slobodeckii_norm(&u, 0.3, 2.0).unwrap() - 1.5).abs() < 1e-12);
        assert!((sobolev_slobodeckii_norm(&u, 1.5, 3.0).unwrap() - 1.5).abs() < 1e-12);
        assert!((sobolev_slobodeckii_norm(&u, 0.0, 2.0).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn slobodeckii_monotone_in_s_for_low_modes() {
        let g = g1(64);
        let u = Field::from_fn(g, |x| (2.0 * PI * x[0]).sin() + 0.3 * (6.0 * PI * x[0]).cos());
        let a = sobolev_slobodeckii_norm(&u, 0.25, 2.0).unwrap();
        let b = sobolev_slobodeckii_norm(&u, 0.75, 2.0).unwrap();
        let c = sobolev_slobodeckii_norm(&u, 1.5, 2.0).unwrap();
        assert!(a <= b && b <= c, "{a} {b} {c}");
    }

    #[test]
    fn report_serializes() {
        let r = NormReport::new("lp", 1.5, &[("p", 2.0)]).unwrap();
        let back: NormReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(NormReport::new("bad", f64::NAN, &[]).is_err());
    }
}
