//! The model Hamiltonian `h(x)|p|^γ + b(x)·p`, its gradient in `p`, its
//! Legendre transform and sampled structure constants.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exponents::conjugate;
use crate::grid::{Field, TorusGrid, VectorField};
use crate::norms::lattice_offsets;

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub gamma: f64,
    pub h: Field,
    pub b: VectorField,
    /// Growth constant certified on the default sample lattice.
    pub c_h: f64,
    b_zero: bool,
}

fn norm2(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum()
}

/// `|p|^γ` from `|p|²`.
#[inline]
fn pow_from_sq(p2: f64, gamma: f64) -> f64 {
    if gamma == 2.0 {
        p2
    } else if p2 == 0.0 {
        0.0
    } else {
        p2.powf(0.5 * gamma)
    }
}

impl HamiltonianSpec {
    pub fn new(gamma: f64, h: Field, b: VectorField) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(LabError::param("gamma", format!("{gamma} must exceed 1")));
        }
        h.check_finite("h")?;
        if h.min() <= 0.0 {
            return Err(LabError::param("h", format!("min h = {} must be positive", h.min())));
        }
        if b.dim() != h.grid.d {
            return Err(LabError::GridMismatch("drift dimension".into()));
        }
        for c in &b.components {
            h.check_same_grid(c)?;
            c.check_finite("b")?;
        }
        let b_zero = b.components.iter().all(|c| c.values.iter().all(|&v| v == 0.0));
        let mut spec = HamiltonianSpec { gamma, h, b, c_h: 0.0, b_zero };
        spec.c_h = spec.growth_constant(&PSampler::default());
        Ok(spec)
    }

    /// `|p|^γ`.
    pub fn uniform(grid: TorusGrid, gamma: f64) -> Result<Self> {
        HamiltonianSpec::new(gamma, Field::constant(grid, 1.0), VectorField::zeros(grid))
    }

    /// `h(x)|p|^γ + b·p` with constant `b`.
    pub fn with_coefficients(
        grid: TorusGrid,
        gamma: f64,
        h: impl Fn(&[f64]) -> f64,
        b: &[f64],
    ) -> Result<Self> {
        HamiltonianSpec::new(gamma, Field::from_fn(grid, h), VectorField::constant(grid, b))
    }

    pub fn grid(&self) -> TorusGrid {
        self.h.grid
    }

    pub fn gamma_conj(&self) -> f64 {
        conjugate(self.gamma)
    }

    /// `G(x,p) = H(x,−p)`.
    pub fn flipped(&self) -> Result<Self> {
        HamiltonianSpec::new(self.gamma, self.h.clone(), self.b.scale(-1.0))
    }

    /// Same Hamiltonian with coefficients sampled at `x − ξ`.
    pub fn shifted(&self, xi: &[i64]) -> Result<Self> {
        let h = crate::spectral::shift(&self.h, xi);
        let b = VectorField {
            components: self.b.components.iter().map(|c| crate::spectral::shift(c, xi)).collect(),
        };
        HamiltonianSpec::new(self.gamma, h, b)
    }

    fn b_dot(&self, idx: usize, p: &[f64]) -> f64 {
        if self.b_zero {
            return 0.0;
        }
        self.b.components.iter().zip(p).map(|(c, &pi)| c.values[idx] * pi).sum()
    }

    pub fn evaluate_h(&self, idx: usize, p: &[f64]) -> f64 {
        self.h.values[idx] * pow_from_sq(norm2(p), self.gamma) + self.b_dot(idx, p)
    }

    /// `γh|p|^{γ−2}p + b`, with the first term set to zero at `p = 0`.
    pub fn evaluate_dph(&self, idx: usize, p: &[f64]) -> Vec<f64> {
        let p2 = norm2(p);
        let w = if p2 == 0.0 {
            0.0
        } else {
            self.gamma * self.h.values[idx] * pow_from_sq(p2, self.gamma - 2.0)
        };
        p.iter()
            .enumerate()
            .map(|(a, &pa)| w * pa + if self.b_zero { 0.0 } else { self.b.components[a].values[idx] })
            .collect()
    }

    /// Closed-form Lagrangian `c_γ h^{1−γ′} |ν − b|^{γ′}`, `c_γ = (γ−1)γ^{−γ′}`.
    pub fn legendre_transform(&self, idx: usize, nu: &[f64]) -> f64 {
        let gc = self.gamma_conj();
        let c = (self.gamma - 1.0) * self.gamma.powf(-gc);
        let shifted: Vec<f64> = nu
            .iter()
            .enumerate()
            .map(|(a, &v)| v - if self.b_zero { 0.0 } else { self.b.components[a].values[idx] })
            .collect();
        c * self.h.values[idx].powf(1.0 - gc) * pow_from_sq(norm2(&shifted), gc)
    }

    /// `H(x, Du(x))` over the lattice from gradient components.
    pub fn hamiltonian_values(&self, grad: &[Vec<f64>], out: &mut [f64]) {
        let d = grad.len();
        let g = self.gamma;
        for (i, o) in out.iter_mut().enumerate() {
            let mut p2 = 0.0;
            let mut bp = 0.0;
            for a in 0..d {
                let pa = grad[a][i];
                p2 += pa * pa;
                if !self.b_zero {
                    bp += self.b.components[a].values[i] * pa;
                }
            }
            *o = self.h.values[i] * pow_from_sq(p2, g) + bp;
        }
    }

    pub fn hamiltonian_field(&self, grad: &VectorField) -> Field {
        let comps: Vec<Vec<f64>> = grad.components.iter().map(|c| c.values.clone()).collect();
        let mut out = vec![0.0; self.grid().points()];
        self.hamiltonian_values(&comps, &mut out);
        Field::from_raw(self.grid(), out)
    }

    /// `D_pH(x, Du(x))` over the lattice.
    pub fn dph_values(&self, grad: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let d = grad.len();
        let np = grad[0].len();
        let mut out = vec![vec![0.0; np]; d];
        for i in 0..np {
            let p2: f64 = (0..d).map(|a| grad[a][i] * grad[a][i]).sum();
            let w = if p2 == 0.0 {
                0.0
            } else {
                self.gamma * self.h.values[i] * pow_from_sq(p2, self.gamma - 2.0)
            };
            for a in 0..d {
                out[a][i] = w * grad[a][i] + if self.b_zero { 0.0 } else { self.b.components[a].values[i] };
            }
        }
        out
    }

    pub fn dph_field(&self, grad: &VectorField) -> VectorField {
        let comps: Vec<Vec<f64>> = grad.components.iter().map(|c| c.values.clone()).collect();
        VectorField {
            components: self
                .dph_values(&comps)
                .into_iter()
                .map(|v| Field::from_raw(self.grid(), v))
                .collect(),
        }
    }

    /// `L(x, ν(x))` over the lattice.
    pub fn lagrangian_field(&self, nu: &VectorField) -> Field {
        let g = self.grid();
        let values = (0..g.points())
            .map(|i| {
                let v = nu.at(i);
                self.legendre_transform(i, &v[..g.d])
            })
            .collect();
        Field::from_raw(g, values)
    }

    fn growth_constant(&self, sampler: &PSampler) -> f64 {
        let d = self.grid().d;
        let ps = sampler.points(d);
        let mut c: f64 = 1.0;
        for idx in sampler.x_indices(&self.grid()) {
            for p in &ps {
                let a = pow_from_sq(norm2(p), self.gamma);
                let hv = self.evaluate_h(idx, p);
                c = c.max(hv / (a + 1.0)).max(0.5 * (-hv + (hv * hv + 4.0 * a).sqrt()));
            }
        }
        c
    }

    /// Sampled structure constants for the growth, Hölder-in-x, convexity and
    /// Lagrangian growth conditions.
    pub fn verify_assumptions(&self, alpha: f64) -> Result<Certificate> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(LabError::param("alpha", format!("{alpha} not in (0,1]")));
        }
        let grid = self.grid();
        let d = grid.d;
        let sampler = PSampler::default();
        let ps = sampler.points(d);
        let xs = sampler.x_indices(&grid);
        let gc = self.gamma_conj();

        let c_h = self.growth_constant(&sampler);

        // H(x,p) − H(x+ξ,p) ≤ C |ξ|^α (|D_pH(x,p)|^{γ′} + 1)
        let offsets = sampler.offsets(&grid);
        let mut c_h_alpha: f64 = 0.0;
        for &idx in &xs {
            let mi = grid.multi_index(idx);
            for (xi, dist) in &offsets {
                let mut tgt = [0usize; 3];
                for a in 0..d {
                    tgt[a] = (mi[a] as i64 + xi[a]).rem_euclid(grid.n as i64) as usize;
                }
                let jdx = grid.flat_index(&tgt);
                for p in &ps {
                    let lhs = self.evaluate_h(idx, p) - self.evaluate_h(jdx, p);
                    if lhs > 0.0 {
                        let dp = self.evaluate_dph(idx, p);
                        let rhs = dist.powf(alpha) * (pow_from_sq(norm2(&dp), gc) + 1.0);
                        c_h_alpha = c_h_alpha.max(lhs / rhs);
                    }
                }
            }
        }

        // Tr(D²_pp H M²) ≥ λ (1+|p|²)^{(γ−2)/2} |M|²; the minimum over M is the
        // smallest eigenvalue of D²_pp H = hγ|p|^{γ−2}(I + (γ−2) p̂p̂ᵀ).
        let mut h2 = f64::INFINITY;
        let mut witness = None;
        for &idx in &xs {
            let hv = self.h.values[idx];
            for p in &ps {
                let p2 = norm2(p);
                let weight = (1.0 + p2).powf(0.5 * (self.gamma - 2.0));
                let lam = if p2 == 0.0 {
                    if self.gamma < 2.0 {
                        f64::INFINITY
                    } else if self.gamma == 2.0 {
                        2.0 * hv
                    } else {
                        0.0
                    }
                } else {
                    let radial = if d == 1 { self.gamma - 1.0 } else { (self.gamma - 1.0).min(1.0) };
                    hv * self.gamma * pow_from_sq(p2, self.gamma - 2.0) * radial
                };
                let r = lam / weight;
                if r < h2 {
                    h2 = r;
                    if r <= 0.0 {
                        witness = Some(p.clone());
                    }
                }
            }
        }

        // C_L^{-1}|ν|^{γ′} − C_L ≤ L(x,ν) ≤ C_L|ν|^{γ′} + C_L
        let mut c_l: f64 = 1.0;
        for &idx in &xs {
            for nu in &ps {
                let a = pow_from_sq(norm2(nu), gc);
                let l = self.legendre_transform(idx, nu);
                c_l = c_l.max(l / (a + 1.0)).max(0.5 * (-l + (l * l + 4.0 * a).sqrt()));
            }
        }

        Ok(Certificate {
            alpha,
            c_h,
            c_h_alpha,
            h2_constant: if witness.is_some() { None } else { Some(h2) },
            h2_witness: witness,
            c_l,
            samples: SampleDescriptor {
                x_points: xs.len(),
                p_points: ps.len(),
                p_radius_max: sampler.r_max,
                shifts: offsets.len(),
            },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&HamiltonianRecord::from(self)).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: HamiltonianRecord =
            serde_json::from_str(s).map_err(|e| LabError::Config(e.to_string()))?;
        r.into_spec()
    }
}

/// Serialized form of a [`HamiltonianSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianRecord {
    pub gamma: f64,
    pub d: usize,
    pub n: usize,
    pub h: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub c_h: f64,
}

impl From<&HamiltonianSpec> for HamiltonianRecord {
    fn from(s: &HamiltonianSpec) -> Self {
        HamiltonianRecord {
            gamma: s.gamma,
            d: s.grid().d,
            n: s.grid().n,
            h: s.h.values.clone(),
            b: s.b.components.iter().map(|c| c.values.clone()).collect(),
            c_h: s.c_h,
        }
    }
}

impl HamiltonianRecord {
    pub fn into_spec(self) -> Result<HamiltonianSpec> {
        let grid = TorusGrid::new(self.d, self.n, 1.0, 1)?;
        let h = Field::new(grid, self.h)?;
        let b = VectorField::new(
            self.b.into_iter().map(|v| Field::new(grid, v)).collect::<Result<_>>()?,
        )?;
        HamiltonianSpec::new(self.gamma, h, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDescriptor {
    pub x_points: usize,
    pub p_points: usize,
    pub p_radius_max: f64,
    pub shifts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub alpha: f64,
    pub c_h: f64,
    pub c_h_alpha: f64,
    /// `None` when the convexity weight degenerates somewhere on the lattice.
    pub h2_constant: Option<f64>,
    pub h2_witness: Option<Vec<f64>>,
    pub c_l: f64,
    pub samples: SampleDescriptor,
}

/// Sample lattice in `p`-space: geometric radii times a fixed direction set.
#[derive(Debug, Clone)]
struct PSampler {
    radii: usize,
    r_max: f64,
    x_max: usize,
}

impl Default for PSampler {
    fn default() -> Self {
        PSampler { radii: 40, r_max: 100.0, x_max: 64 }
    }
}

impl PSampler {
    fn points(&self, d: usize) -> Vec<Vec<f64>> {
        let mut radii = vec![0.0];
        let r0: f64 = 1e-3;
        let ratio = (self.r_max / r0).powf(1.0 / (self.radii - 1) as f64);
        for i in 0..self.radii {
            radii.push(r0 * ratio.powi(i as i32));
        }
        let dirs: Vec<Vec<f64>> = match d {
            1 => vec![vec![1.0], vec![-1.0]],
            2 => (0..16)
                .map(|k| {
                    let th = k as f64 * std::f64::consts::PI / 8.0;
                    vec![th.cos(), th.sin()]
                })
                .collect(),
            _ => {
                let mut v = Vec::new();
                for a in [-1.0, 0.0, 1.0] {
                    for b in [-1.0, 0.0, 1.0] {
                        for c in [-1.0, 0.0, 1.0] {
                            let n = ((a * a + b * b + c * c) as f64).sqrt();
                            if n > 0.0 {
                                v.push(vec![a / n, b / n, c / n]);
                            }
                        }
                    }
                }
                v
            }
        };
        let mut out = vec![vec![0.0; d]];
        for &r in &radii[1..] {
            for dir in &dirs {
                out.push(dir.iter().map(|c| c * r).collect());
            }
        }
        out
    }

    fn x_indices(&self, grid: &TorusGrid) -> Vec<usize> {
        let np = grid.points();
        let step = (np / self.x_max).max(1);
        (0..np).step_by(step).collect()
    }

    fn offsets(&self, grid: &TorusGrid) -> Vec<(Vec<i64>, f64)> {
        let all = lattice_offsets(grid);
        let step = (all.len() / 32).max(1);
        all.into_iter().step_by(step).collect()
    }
}
