//! Integrating-factor solver for `∂_t u − Δu + H(x,Du) = f` on the torus.
//!
//! Diffusion is integrated exactly per mode; the dealiased nonlinearity is
//! advanced with a two-stage explicit stage (see [`Integrator`]).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{Field, SpaceTimeField, TorusGrid};
use crate::hamiltonian::HamiltonianSpec;
use crate::norms::time_derivative;
use crate::spectral::{self, Spectral, C64};
use crate::stepper::{Integrator, StepTables};

/// Courant factor of the step controller.
pub const CFL: f64 = 0.25;
/// Per-step growth of `max |Du|` treated as blow-up.
pub const BLOW_UP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HJSign {
    /// `∂_t u − Δu + H(x,Du) = f`.
    Forward,
    /// `∂_t v − Δv = H(x,Dv) − f`.
    KpzFlipped,
}

impl HJSign {
    fn factor(self) -> f64 {
        match self {
            HJSign::Forward => 1.0,
            HJSign::KpzFlipped => -1.0,
        }
    }
}

pub type ForcingFn = Arc<dyn Fn(f64) -> Field + Send + Sync>;

/// Right-hand side, either stored slices or a function of time.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    /// Linear interpolation between stored slices.
    Sampled(SpaceTimeField),
    Analytic(ForcingFn),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Sampled(s) => write!(f, "Sampled(nt = {})", s.grid.nt),
            Forcing::Analytic(_) => write!(f, "Analytic"),
        }
    }
}

impl Forcing {
    pub fn analytic(f: impl Fn(f64) -> Field + Send + Sync + 'static) -> Self {
        Forcing::Analytic(Arc::new(f))
    }

    pub fn at(&self, grid: TorusGrid, t: f64) -> Field {
        match self {
            Forcing::Zero => Field::zeros(grid),
            Forcing::Sampled(s) => s.at_time(t),
            Forcing::Analytic(f) => f(t),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }

    /// Samples on the slices of `grid`.
    pub fn sample(&self, grid: TorusGrid) -> SpaceTimeField {
        SpaceTimeField::from_slice_fn(grid, |t| self.at(grid, t))
    }

    /// Pointwise clamp to `[−k, k]`.
    pub fn truncated(&self, k: f64) -> Forcing {
        if k.is_infinite() {
            return self.clone();
        }
        match self {
            Forcing::Zero => Forcing::Zero,
            Forcing::Sampled(s) => Forcing::Sampled(truncate_unchecked(s, k)),
            Forcing::Analytic(f) => {
                let f = f.clone();
                Forcing::analytic(move |t| f(t).map(|v| v.clamp(-k, k)))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct HJProblem {
    /// Spatial lattice, horizon and number of stored slices.
    pub grid: TorusGrid,
    pub spec: HamiltonianSpec,
    pub f: Forcing,
    pub u0: Field,
    pub sign: HJSign,
    pub integrator: Integrator,
}

impl HJProblem {
    pub fn new(grid: TorusGrid, spec: HamiltonianSpec, f: Forcing, u0: Field) -> Result<Self> {
        let p = HJProblem { grid, spec, f, u0, sign: HJSign::Forward, integrator: Integrator::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn with_sign(mut self, sign: HJSign) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.grid.same_space(&self.spec.grid()) || !self.grid.same_space(&self.u0.grid) {
            return Err(LabError::GridMismatch("problem fields differ from the grid".into()));
        }
        self.u0.check_finite("u0")?;
        if let Forcing::Sampled(s) = &self.f {
            if !s.grid.same_space(&self.grid) {
                return Err(LabError::GridMismatch("forcing lattice".into()));
            }
            if (s.grid.t_final - self.grid.t_final).abs() > 1e-12 * self.grid.t_final {
                return Err(LabError::GridMismatch("forcing horizon".into()));
            }
            for sl in &s.slices {
                sl.check_finite("f")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HJSolution {
    pub u: SpaceTimeField,
    /// Max pointwise residual of the equation on interior stored slices,
    /// centered differences in time.
    pub residual: f64,
    /// `max |Du|` at the start of every internal step.
    pub max_grad: Vec<f64>,
    pub steps: usize,
    /// Extra sub-steps inserted by the step controller.
    pub substeps: usize,
}

/// Evaluates the dealiased nonlinearity in Fourier space.
struct Nonlinearity<'a> {
    sp: &'a Spectral,
    spec: &'a HamiltonianSpec,
    f: &'a Forcing,
    grid: TorusGrid,
    sign: f64,
    buf: Vec<f64>,
}

impl Nonlinearity<'_> {
    /// Returns `P[sign·(H(x,Du) − f(t))]` in Fourier space and `max |Du|`.
    fn eval(&mut self, uhat: &[C64], t: f64) -> (Vec<C64>, f64) {
        let grad = self.sp.gradient_from_hat(uhat);
        self.spec.hamiltonian_values(&grad, &mut self.buf);
        let mut gmax: f64 = 0.0;
        for i in 0..self.buf.len() {
            let p2: f64 = grad.iter().map(|c| c[i] * c[i]).sum();
            gmax = gmax.max(p2);
        }
        if !self.f.is_zero() {
            let fv = self.f.at(self.grid, t);
            for (b, v) in self.buf.iter_mut().zip(&fv.values) {
                *b -= v;
            }
        }
        if self.sign != 1.0 {
            for b in self.buf.iter_mut() {
                *b *= self.sign;
            }
        }
        let mut hat = self.sp.forward(&self.buf);
        self.sp.dealias_hat(&mut hat);
        (hat, gmax.sqrt())
    }
}

/// Advance `problem` with `nt` internal steps; `nt` must be a multiple of
/// `problem.grid.nt`, the number of stored slices minus one.
pub fn solve_hj(problem: &HJProblem, nt: usize) -> Result<HJSolution> {
    problem.validate()?;
    let grid = problem.grid;
    if nt == 0 || nt % grid.nt != 0 {
        return Err(LabError::param("nt", format!("{nt} is not a multiple of {}", grid.nt)));
    }
    let stride = nt / grid.nt;
    let dt = grid.t_final / nt as f64;
    let sp = Spectral::for_grid(&grid);
    let gamma = problem.spec.gamma;
    let dx = grid.dx();
    let mut nl = Nonlinearity {
        sp: &sp,
        spec: &problem.spec,
        f: &problem.f,
        grid,
        sign: problem.sign.factor(),
        buf: vec![0.0; grid.points()],
    };
    let full = StepTables::new(sp.k2(), dt);
    let scheme = problem.integrator;

    let mut uhat = sp.forward(&problem.u0.values);
    let mut slices = Vec::with_capacity(grid.nt + 1);
    slices.push(problem.u0.clone());
    let mut max_grad = Vec::with_capacity(nt);
    let mut prev = spectral::gradient(&problem.u0)?.max_magnitude();
    let mut substeps = 0;
    let blown = |g: f64, prev: f64| !g.is_finite() || g > BLOW_UP_FACTOR * prev.max(1.0);

    for step in 0..nt {
        let t = step as f64 * dt;
        let (n0, g0) = nl.eval(&uhat, t);
        if blown(g0, prev) {
            return Err(LabError::BlowUp { t, max_grad: g0 });
        }
        max_grad.push(g0);
        prev = g0;
        let allowed = CFL * dx / g0.powf(gamma - 1.0).max(1.0);
        let m = if dt > allowed { (dt / allowed).ceil() as usize } else { 1 };
        let sub;
        let tables = if m == 1 {
            &full
        } else {
            substeps += m - 1;
            sub = StepTables::new(sp.k2(), dt / m as f64);
            &sub
        };
        let mut n_k = n0;
        for k in 0..m {
            let tk = t + k as f64 * tables.h;
            if k > 0 {
                let (v, g) = nl.eval(&uhat, tk);
                if blown(g, prev) {
                    return Err(LabError::BlowUp { t: tk, max_grad: g });
                }
                n_k = v;
            }
            tables.step(scheme, &mut uhat, &n_k, tk, |v, s| Ok(nl.eval(v, s).0))?;
        }
        if (step + 1) % stride == 0 {
            let vals = sp.inverse(uhat.clone())?;
            let field = Field::from_raw(grid, vals);
            if field.values.iter().any(|v| !v.is_finite()) {
                return Err(LabError::BlowUp { t: t + dt, max_grad: f64::INFINITY });
            }
            slices.push(field);
        }
    }
    let u = SpaceTimeField::new(grid, slices)?;
    let residual = pde_residual(&u, &problem.spec, &problem.f, problem.sign)?;
    Ok(HJSolution { u, residual, max_grad, steps: nt, substeps })
}

/// `max |∂_t u − Δu + sign·P(H(x,Du) − f)|` on interior stored slices.
pub fn pde_residual(u: &SpaceTimeField, spec: &HamiltonianSpec, f: &Forcing, sign: HJSign) -> Result<f64> {
    let g = u.grid;
    if g.nt < 2 {
        return Ok(0.0);
    }
    let ut = time_derivative(u)?;
    let sp = Spectral::for_grid(&g);
    let mut worst: f64 = 0.0;
    let mut buf = vec![0.0; g.points()];
    for j in 1..g.nt {
        let hat = sp.forward(&u.slices[j].values);
        let grad = sp.gradient_from_hat(&hat);
        spec.hamiltonian_values(&grad, &mut buf);
        let fv = f.at(g, g.time(j));
        for (b, v) in buf.iter_mut().zip(&fv.values) {
            *b = sign.factor() * (*b - v);
        }
        let mut nh = sp.forward(&buf);
        sp.dealias_hat(&mut nh);
        let lap: Vec<C64> = hat.iter().zip(sp.k2()).map(|(&z, &k)| -z * k).collect();
        let total: Vec<C64> = nh.iter().zip(&lap).map(|(&a, &b)| a - b).collect();
        let r = sp.inverse(total)?;
        for (a, b) in r.iter().zip(&ut.slices[j].values) {
            worst = worst.max((a + b).abs());
        }
    }
    Ok(worst)
}

/// Pointwise clamp to `[−k, k]`.
pub fn truncate(f: &SpaceTimeField, k: f64) -> Result<SpaceTimeField> {
    if !(k > 0.0) {
        return Err(LabError::param("k", format!("{k} must be positive")));
    }
    Ok(truncate_unchecked(f, k))
}

fn truncate_unchecked(f: &SpaceTimeField, k: f64) -> SpaceTimeField {
    f.map(move |v| v.clamp(-k, k))
}

/// Problem with right-hand side `T_k(f)` and datum mollified by the heat
/// kernel at time `1/k`; `k = ∞` leaves both untouched.
pub fn regularized_problem(problem: &HJProblem, k: f64) -> Result<HJProblem> {
    if !(k > 0.0) {
        return Err(LabError::param("k", format!("{k} must be positive")));
    }
    let s = if k.is_infinite() { 0.0 } else { 1.0 / k };
    Ok(HJProblem {
        grid: problem.grid,
        spec: problem.spec.clone(),
        f: problem.f.truncated(k),
        u0: spectral::heat_mollify(&problem.u0, s)?,
        sign: problem.sign,
        integrator: problem.integrator,
    })
}

pub fn solve_regularized(problem: &HJProblem, k: f64, nt: usize) -> Result<HJSolution> {
    solve_hj(&regularized_problem(problem, k)?, nt)
}

/// `P[H(x, Du)]` evaluated the way the solver does.
pub fn dealiased_hamiltonian(u: &Field, spec: &HamiltonianSpec) -> Result<Field> {
    let sp = Spectral::for_grid(&u.grid);
    let hat = sp.forward(&u.values);
    let grad = sp.gradient_from_hat(&hat);
    let mut buf = vec![0.0; u.grid.points()];
    spec.hamiltonian_values(&grad, &mut buf);
    let mut nh = sp.forward(&buf);
    sp.dealias_hat(&mut nh);
    Ok(Field::from_raw(u.grid, sp.inverse(nh)?))
}

/// `f = ∂_t u* − Δu* + P[H(x,Du*)]` with the time derivative by finite differences.
pub fn manufacture_rhs(u_star: &SpaceTimeField, spec: &HamiltonianSpec) -> Result<SpaceTimeField> {
    let ut = time_derivative(u_star)?;
    let slices = u_star
        .slices
        .iter()
        .zip(&ut.slices)
        .map(|(u, d)| {
            let lap = spectral::laplacian(u)?;
            let h = dealiased_hamiltonian(u, spec)?;
            Ok(d.sub(&lap).add(&h))
        })
        .collect::<Result<_>>()?;
    SpaceTimeField::new(u_star.grid, slices)
}

/// Manufactured forcing from closed-form `u*(t)` and `∂_t u*(t)`.
pub fn manufactured_forcing<U, D>(spec: &HamiltonianSpec, u_star: U, du_dt: D) -> Forcing
where
    U: Fn(f64) -> Field + Send + Sync + 'static,
    D: Fn(f64) -> Field + Send + Sync + 'static,
{
    let spec = spec.clone();
    Forcing::analytic(move |t| {
        let u = u_star(t);
        let lap = spectral::laplacian(&u).expect("finite manufactured field");
        let h = dealiased_hamiltonian(&u, &spec).expect("finite manufactured field");
        du_dt(t).sub(&lap).add(&h)
    })
}

/// Concentrating space-time bump
/// `A σ^{−(d+2)/s} φ((x−x0)/σ) ψ((t−t0)/σ²)` with Gaussian profiles, the
/// spatial one taken at the periodic minimum image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularBump {
    pub s: f64,
    pub x0: [f64; 3],
    pub t0: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

impl SingularBump {
    pub fn new(s: f64, x0: &[f64], t0: f64, sigma: f64, amplitude: f64) -> Result<Self> {
        if !(s >= 1.0) {
            return Err(LabError::param("s", format!("{s} must be >= 1")));
        }
        if !(sigma > 0.0 && sigma <= 0.5) {
            return Err(LabError::param("sigma", format!("{sigma} not in (0, 1/2]")));
        }
        let mut c = [0.0; 3];
        for (a, &v) in x0.iter().enumerate().take(3) {
            c[a] = v;
        }
        Ok(SingularBump { s, x0: c, t0, sigma, amplitude })
    }

    /// Peak value `A σ^{−(d+2)/s}`.
    pub fn peak(&self, d: usize) -> f64 {
        self.amplitude * self.sigma.powf(-(d as f64 + 2.0) / self.s)
    }

    pub fn spatial_profile(&self, grid: TorusGrid) -> Field {
        let sig = self.sigma;
        let x0 = self.x0;
        Field::from_fn(grid, |x| {
            let r2: f64 = x
                .iter()
                .enumerate()
                .map(|(a, &xa)| (crate::grid::periodic_delta(xa, x0[a]) / sig).powi(2))
                .sum();
            (-r2).exp()
        })
    }

    pub fn time_profile(&self, t: f64) -> f64 {
        let tau = (t - self.t0) / (self.sigma * self.sigma);
        (-tau * tau).exp()
    }

    pub fn forcing(&self, grid: TorusGrid) -> Forcing {
        let base = self.spatial_profile(grid).scale(self.peak(grid.d));
        let me = *self;
        Forcing::analytic(move |t| base.scale(me.time_profile(t)))
    }

    pub fn sample(&self, grid: TorusGrid) -> SpaceTimeField {
        self.forcing(grid).sample(grid)
    }
}

/// Sampled singular right-hand side on `grid`.
pub fn make_singular_f(grid: TorusGrid, s: f64, x0: &[f64], t0: f64, sigma: f64) -> Result<SpaceTimeField> {
    Ok(SingularBump::new(s, x0, t0, sigma, 1.0)?.sample(grid))
}
