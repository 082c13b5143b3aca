//! Fokker-Planck equations in divergence form,
//! forward `∂_t m − Δm + div(bm) = 0` and backward `−∂_t ρ − Δρ + div(bρ) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exponents::holder_dual;
use crate::grid::{trapezoid, Field, SpaceTimeField, TorusGrid, VectorField};
use crate::hamiltonian::HamiltonianSpec;
use crate::interpolation::RatioReport;
use crate::norms::{lp_norm, lq_spacetime_norm, time_derivative};
use crate::spectral::{self, Spectral, C64};
use crate::stepper::{Integrator, StepTables};

/// Courant factor for the explicit drift term.
pub const FP_CFL: f64 = 0.25;
/// Allowed drift of the total mass.
pub const MASS_TOL: f64 = 1e-10;
/// Allowed undershoot relative to the maximum.
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Initial datum at `t = 0`.
    Forward,
    /// Terminal datum at `t = T`.
    Backward,
}

#[derive(Debug, Clone)]
pub struct FPProblem {
    pub grid: TorusGrid,
    /// Drift on each stored slice, `grid.nt + 1` entries.
    pub drift: Vec<VectorField>,
    pub datum: Field,
    pub direction: Direction,
}

impl FPProblem {
    pub fn new(grid: TorusGrid, drift: Vec<VectorField>, datum: Field, direction: Direction) -> Result<Self> {
        if drift.len() != grid.nt + 1 {
            return Err(LabError::GridMismatch(format!(
                "{} drift slices for nt = {}",
                drift.len(),
                grid.nt
            )));
        }
        for b in &drift {
            if !b.grid().same_space(&grid) || b.dim() != grid.d {
                return Err(LabError::GridMismatch("drift lattice".into()));
            }
            for c in &b.components {
                c.check_finite("drift")?;
            }
        }
        datum.check_finite("datum")?;
        datum.check_same_grid(&Field::zeros(grid))?;
        if datum.min() < 0.0 {
            return Err(LabError::param("datum", format!("negative value {}", datum.min())));
        }
        Ok(FPProblem { grid, drift, datum, direction })
    }

    /// Time-independent drift.
    pub fn steady(grid: TorusGrid, drift: VectorField, datum: Field, direction: Direction) -> Result<Self> {
        FPProblem::new(grid, vec![drift; grid.nt + 1], datum, direction)
    }

    fn drift_at(&self, t: f64) -> Vec<Vec<f64>> {
        let g = self.grid;
        let s = (t / g.dt()).clamp(0.0, g.nt as f64);
        let j = (s.floor() as usize).min(g.nt.saturating_sub(1));
        let w = s - j as f64;
        let a = &self.drift[j];
        let b = &self.drift[(j + 1).min(g.nt)];
        a.components
            .iter()
            .zip(&b.components)
            .map(|(ca, cb)| {
                if w == 0.0 {
                    ca.values.clone()
                } else {
                    ca.values.iter().zip(&cb.values).map(|(x, y)| (1.0 - w) * x + w * y).collect()
                }
            })
            .collect()
    }
}

struct DriftTerm<'a> {
    sp: &'a Spectral,
    problem: &'a FPProblem,
    reverse: bool,
}

impl DriftTerm<'_> {
    /// `div(P[b ρ])` in Fourier space at marching time `s`, and `max |b|`.
    fn eval(&self, rho_hat: &[C64], s: f64) -> Result<(Vec<C64>, f64)> {
        let t = if self.reverse { self.problem.grid.t_final - s } else { s };
        let b = self.problem.drift_at(t);
        let rho = self.sp.inverse_complex(rho_hat.to_vec());
        let mut bmax: f64 = 0.0;
        for i in 0..rho.len() {
            let m2: f64 = b.iter().map(|c| c[i] * c[i]).sum();
            bmax = bmax.max(m2);
        }
        let mut out = vec![C64::new(0.0, 0.0); rho.len()];
        for (a, comp) in b.iter().enumerate() {
            let prod: Vec<f64> = comp.iter().zip(&rho).map(|(bv, r)| bv * r.re).collect();
            let mut hat = self.sp.forward(&prod);
            self.sp.dealias_hat(&mut hat);
            let dh = self.sp.derivative_hat(&hat, a);
            for (o, v) in out.iter_mut().zip(dh) {
                *o += v;
            }
        }
        Ok((out, bmax.sqrt()))
    }
}

/// March the density with `nt` internal steps (a multiple of `grid.nt`);
/// slices are returned in physical time order.
pub fn solve_fp(problem: &FPProblem, nt: usize) -> Result<SpaceTimeField> {
    solve_fp_with(problem, nt, Integrator::default())
}

pub fn solve_fp_with(problem: &FPProblem, nt: usize, scheme: Integrator) -> Result<SpaceTimeField> {
    let grid = problem.grid;
    if nt == 0 || nt % grid.nt != 0 {
        return Err(LabError::param("nt", format!("{nt} is not a multiple of {}", grid.nt)));
    }
    let stride = nt / grid.nt;
    let dt = grid.t_final / nt as f64;
    let sp = Spectral::for_grid(&grid);
    let term = DriftTerm { sp: &sp, problem, reverse: problem.direction == Direction::Backward };
    let full = StepTables::new(sp.k2(), dt);
    let mass0 = problem.datum.integral();
    let dx = grid.dx();

    let mut hat = sp.forward(&problem.datum.values);
    let mut slices = Vec::with_capacity(grid.nt + 1);
    slices.push(problem.datum.clone());
    for step in 0..nt {
        let s = step as f64 * dt;
        let (n0, bmax) = term.eval(&hat, s)?;
        let allowed = FP_CFL * dx / bmax.max(1.0);
        let m = if dt > allowed { (dt / allowed).ceil() as usize } else { 1 };
        let sub;
        let tables = if m == 1 {
            &full
        } else {
            sub = StepTables::new(sp.k2(), dt / m as f64);
            &sub
        };
        let mut n_k = n0;
        for k in 0..m {
            let sk = s + k as f64 * tables.h;
            if k > 0 {
                n_k = term.eval(&hat, sk)?.0;
            }
            tables.step(scheme, &mut hat, &n_k, sk, |v, t| Ok(term.eval(v, t)?.0))?;
        }
        if (step + 1) % stride == 0 {
            let rho = Field::from_raw(grid, sp.inverse(hat.clone())?);
            rho.check_finite("density")?;
            let idx = slices.len();
            let drift = (rho.integral() - mass0).abs();
            if drift > MASS_TOL * mass0.abs().max(1.0) {
                return Err(LabError::MassDrift { slice: idx, drift });
            }
            let tol = POSITIVITY_TOL * rho.max().max(0.0);
            if rho.min() < -tol {
                return Err(LabError::PositivityViolation { slice: idx, min: rho.min(), tol });
            }
            slices.push(rho);
        }
    }
    if problem.direction == Direction::Backward {
        slices.reverse();
    }
    SpaceTimeField::new(grid, slices)
}

/// Optimal-control drift `−D_pH(x, Dw)` on every slice of `w`.
pub fn control_drift(w: &SpaceTimeField, spec: &HamiltonianSpec) -> Result<Vec<VectorField>> {
    w.slices
        .iter()
        .map(|s| Ok(spec.dph_field(&spectral::gradient(s)?).scale(-1.0)))
        .collect()
}

/// `∬ |b|^{m′} ρ` with `b = −D_pH(x, Dw)`.
pub fn crossed_integral(rho: &SpaceTimeField, w: &SpaceTimeField, m_prime: f64, spec: &HamiltonianSpec) -> Result<f64> {
    let drift = control_drift(w, spec)?;
    Ok(drift_moment(rho, &drift, m_prime))
}

/// `∬ |b|^{m′} ρ` for a given drift.
pub fn drift_moment(rho: &SpaceTimeField, drift: &[VectorField], m_prime: f64) -> f64 {
    let per: Vec<f64> = rho
        .slices
        .iter()
        .zip(drift)
        .map(|(r, b)| b.magnitude().map(|v| v.powf(m_prime)).dot(r))
        .collect();
    trapezoid(&per, rho.grid.dt())
}

/// Compares `‖ρ‖_{W^{1,0}_{σ′}}` with `∬|b|^{m′}ρ + ‖ρ_τ‖_{L^{p′}}`,
/// `m′ = 1 + (d+2)/σ`, `σ = σ′/(σ′−1)`.
pub fn check_rho_energy_estimate(
    rho: &SpaceTimeField,
    drift: &[VectorField],
    sigma_prime: f64,
    rho_tau: &Field,
) -> Result<RatioReport> {
    let d = rho.grid.d as f64;
    let boundary = (d + 2.0) / (d + 1.0);
    if !(sigma_prime > 1.0 && sigma_prime < d + 2.0) {
        return Err(LabError::param("sigma_prime", format!("{sigma_prime} not in (1, d+2)")));
    }
    if (sigma_prime - boundary).abs() < 1e-12 {
        return Err(LabError::param("sigma_prime", "boundary value (d+2)/(d+1) excluded"));
    }
    let sigma = holder_dual(sigma_prime);
    let m_prime = 1.0 + (d + 2.0) / sigma;
    let p_prime = if sigma_prime > boundary { d * sigma / (sigma * (d + 1.0) - (d + 2.0)) } else { 1.0 };
    let grads: Vec<VectorField> = rho.slices.iter().map(spectral::gradient).collect::<Result<_>>()?;
    let mut terms = vec![lq_spacetime_norm(rho, sigma_prime)?];
    for a in 0..rho.grid.d {
        let comp = SpaceTimeField::new(rho.grid, grads.iter().map(|g| g.components[a].clone()).collect())?;
        terms.push(lq_spacetime_norm(&comp, sigma_prime)?);
    }
    let lhs = terms.iter().map(|t| t.powf(sigma_prime)).sum::<f64>().powf(1.0 / sigma_prime);
    let rhs = drift_moment(rho, drift, m_prime) + lp_norm(rho_tau, p_prime)?;
    Ok(RatioReport::new(
        "rho_energy",
        lhs,
        rhs,
        &[("sigma_prime", sigma_prime), ("m_prime", m_prime), ("p_prime", p_prime)],
    ))
}

/// Relative defect of the weak formulation of the backward equation against
/// a test field `φ` on the same slices:
/// `−[∫ρφ]_0^τ + ∬ρ ∂_tφ + ∬(Dρ·Dφ − bρ·Dφ)`.
pub fn weak_form_residual(rho: &SpaceTimeField, drift: &[VectorField], phi: &SpaceTimeField) -> Result<f64> {
    let g = rho.grid;
    let phi_t = time_derivative(phi)?;
    let nt = g.nt;
    let boundary = rho.slices[nt].dot(&phi.slices[nt]) - rho.slices[0].dot(&phi.slices[0]);
    let mut time_terms = Vec::with_capacity(nt + 1);
    let mut diff_terms = Vec::with_capacity(nt + 1);
    let mut drift_terms = Vec::with_capacity(nt + 1);
    for j in 0..=nt {
        let dr = spectral::gradient(&rho.slices[j])?;
        let dp = spectral::gradient(&phi.slices[j])?;
        let mut diff = 0.0;
        let mut adv = 0.0;
        for a in 0..g.d {
            diff += dr.components[a].dot(&dp.components[a]);
            adv += drift[j].components[a].mul(&rho.slices[j]).dot(&dp.components[a]);
        }
        time_terms.push(rho.slices[j].dot(&phi_t.slices[j]));
        diff_terms.push(diff);
        drift_terms.push(adv);
    }
    let h = g.dt();
    let a = trapezoid(&time_terms, h);
    let b = trapezoid(&diff_terms, h);
    let c = trapezoid(&drift_terms, h);
    let total = -boundary + a + b - c;
    let scale = boundary.abs() + a.abs() + b.abs() + c.abs();
    Ok(if scale > 0.0 { total.abs() / scale } else { 0.0 })
}

/// Center of mass along one axis on the circle (via the first Fourier moment).
pub fn circular_mean(rho: &Field, axis: usize) -> f64 {
    let g = rho.grid;
    let (mut c, mut s) = (0.0, 0.0);
    for (i, &v) in rho.values.iter().enumerate() {
        let x = g.coords(i)[axis];
        let th = 2.0 * std::f64::consts::PI * x;
        c += v * th.cos();
        s += v * th.sin();
    }
    (s.atan2(c) / (2.0 * std::f64::consts::PI)).rem_euclid(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_drift_is_backward_heat() {
        let g = TorusGrid::new(1, 32, 0.2, 8).unwrap();
        let datum = Field::from_fn(g, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos());
        let p = FPProblem::steady(g, VectorField::zeros(g), datum.clone(), Direction::Backward).unwrap();
        let rho = solve_fp(&p, 64).unwrap();
        for j in 0..=8 {
            let s = g.t_final - g.time(j);
            let exact = spectral::heat_mollify(&datum, s).unwrap();
            assert!(rho.slices[j].sub(&exact).max_abs() <= 1e-8);
        }
    }

    #[test]
    fn mass_is_conserved_with_drift() {
        let g = TorusGrid::new(2, 16, 0.1, 4).unwrap();
        let b = VectorField {
            components: vec![
                Field::from_fn(g, |x| (2.0 * PI * x[1]).sin()),
                Field::from_fn(g, |x| 0.5 * (2.0 * PI * x[0]).cos()),
            ],
        };
        let datum = Field::from_fn(g, |x| (-(x[0] - 0.5).powi(2) * 20.0).exp() + 0.1);
        let p = FPProblem::steady(g, b, datum.clone(), Direction::Forward).unwrap();
        let m = solve_fp(&p, 80).unwrap();
        for s in &m.slices {
            assert!((s.integral() - datum.integral()).abs() <= 1e-10);
        }
    }

    #[test]
    fn negative_datum_rejected() {
        let g = TorusGrid::new(1, 16, 0.1, 2).unwrap();
        let datum = Field::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        assert!(FPProblem::steady(g, VectorField::zeros(g), datum, Direction::Forward).is_err());
    }

    #[test]
    fn crossed_integral_constants() {
        let g = TorusGrid::new(1, 16, 1.0, 4).unwrap();
        let spec = HamiltonianSpec::uniform(g, 2.0).unwrap();
        let ones = SpaceTimeField::constant(g, 1.0);
        let zero = SpaceTimeField::zeros(g);
        assert_eq!(crossed_integral(&zero, &ones, 2.0, &spec).unwrap(), 0.0);
        // w constant ⇒ Dw = 0 ⇒ b = 0
        assert_eq!(crossed_integral(&ones, &ones, 2.0, &spec).unwrap(), 0.0);
        let drift = vec![VectorField::constant(g, &[2.0]); 5];
        assert!((drift_moment(&ones, &drift, 2.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn energy_estimate_trivial_case() {
        let g = TorusGrid::new(1, 16, 1.0, 4).unwrap();
        let rho = SpaceTimeField::constant(g, 1.0);
        let drift = vec![VectorField::zeros(g); 5];
        let r = check_rho_energy_estimate(&rho, &drift, 2.0, &Field::constant(g, 1.0)).unwrap();
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-12);
        assert!(check_rho_energy_estimate(&rho, &drift, 1.5, &Field::constant(g, 1.0)).is_err());
        assert!(check_rho_energy_estimate(&rho, &drift, 3.5, &Field::constant(g, 1.0)).is_err());
    }
}
