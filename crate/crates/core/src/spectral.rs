//! FFT-based calculus on the unit torus.
//!
//! All operators act mode-wise: derivatives multiply by `i 2πk`, the
//! Laplacian by `−|2πk|²`, the heat semigroup by `exp(−|2πk|² s)`.
//! Odd derivatives drop the Nyquist mode so that real fields stay real.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};
use crate::grid::{Field, TorusGrid, VectorField};

pub type C64 = Complex64;

/// Transform plans and mode tables for one `(d, n)` lattice.
pub struct Spectral {
    pub d: usize,
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `2πk_a` per flat index, Nyquist zeroed, one table per axis.
    deriv: Vec<Vec<f64>>,
    /// `|2πk|²` per flat index.
    k2: Vec<f64>,
    /// Two-thirds rule mask.
    keep: Vec<bool>,
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, usize), Arc<Spectral>>> = RefCell::new(HashMap::new());
}

/// Signed wavenumber of a 1D FFT index.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Spectral {
    /// Cached plan for the spatial part of `grid`.
    pub fn for_grid(grid: &TorusGrid) -> Arc<Spectral> {
        PLANS.with(|p| {
            p.borrow_mut()
                .entry((grid.d, grid.n))
                .or_insert_with(|| Arc::new(Spectral::build(grid.d, grid.n)))
                .clone()
        })
    }

    fn build(d: usize, n: usize) -> Spectral {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let total = n.pow(d as u32);
        let cut = n as f64 / 3.0;
        let mut deriv = vec![vec![0.0; total]; d];
        let mut k2 = vec![0.0; total];
        let mut keep = vec![true; total];
        for idx in 0..total {
            let mut rem = idx;
            for a in (0..d).rev() {
                let i = rem % n;
                rem /= n;
                let k = wavenumber(i, n) as f64;
                let w = 2.0 * PI * k;
                deriv[a][idx] = if i == n / 2 { 0.0 } else { w };
                k2[idx] += w * w;
                if k.abs() > cut {
                    keep[idx] = false;
                }
            }
        }
        Spectral { d, n, fwd, inv, deriv, k2, keep }
    }

    pub fn len(&self) -> usize {
        self.k2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k2.is_empty()
    }

    /// `|2πk|²` table.
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    /// `2πk_a` table (Nyquist zeroed).
    pub fn deriv_symbol(&self, axis: usize) -> &[f64] {
        &self.deriv[axis]
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.keep
    }

    fn transform(&self, data: &mut [C64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        if self.d == 1 {
            return;
        }
        let total = data.len();
        let mut lines = vec![C64::new(0.0, 0.0); total];
        for a in (0..self.d - 1).rev() {
            let stride = n.pow((self.d - 1 - a) as u32);
            let block = stride * n;
            let mut l = 0;
            for start in (0..total).step_by(block) {
                for off in 0..stride {
                    let base = start + off;
                    for i in 0..n {
                        lines[l * n + i] = data[base + i * stride];
                    }
                    l += 1;
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut l = 0;
            for start in (0..total).step_by(block) {
                for off in 0..stride {
                    let base = start + off;
                    for i in 0..n {
                        data[base + i * stride] = lines[l * n + i];
                    }
                    l += 1;
                }
            }
        }
    }

    /// Forward transform of real samples (unnormalized).
    pub fn forward(&self, values: &[f64]) -> Vec<C64> {
        let mut data: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    /// Inverse transform returning both real and imaginary parts, normalized.
    pub fn inverse_complex(&self, mut hat: Vec<C64>) -> Vec<C64> {
        self.transform(&mut hat, true);
        let s = 1.0 / hat.len() as f64;
        for z in hat.iter_mut() {
            *z *= s;
        }
        hat
    }

    /// Inverse transform to real samples; a relative imaginary residue above
    /// `1e-10` is an internal error.
    pub fn inverse(&self, hat: Vec<C64>) -> Result<Vec<f64>> {
        let z = self.inverse_complex(hat);
        let mut max_re = 0.0f64;
        let mut max_im = 0.0f64;
        for v in &z {
            max_re = max_re.max(v.re.abs());
            max_im = max_im.max(v.im.abs());
        }
        if max_im > 1e-10 * max_re.max(1.0) {
            return Err(LabError::ImaginaryResidue(max_im));
        }
        Ok(z.into_iter().map(|v| v.re).collect())
    }

    /// Two real fields from spectra `a` and `b` in one complex transform.
    pub fn inverse_pair(&self, a: &[C64], b: &[C64]) -> (Vec<f64>, Vec<f64>) {
        let packed: Vec<C64> =
            a.iter().zip(b).map(|(&x, &y)| x + C64::new(-y.im, y.re)).collect();
        let z = self.inverse_complex(packed);
        (z.iter().map(|v| v.re).collect(), z.iter().map(|v| v.im).collect())
    }

    /// Spectrum of `∂_a u`.
    pub fn derivative_hat(&self, hat: &[C64], axis: usize) -> Vec<C64> {
        hat.iter()
            .zip(&self.deriv[axis])
            .map(|(&z, &w)| C64::new(-w * z.im, w * z.re))
            .collect()
    }

    /// All gradient components of the field with spectrum `hat`.
    pub fn gradient_from_hat(&self, hat: &[C64]) -> Vec<Vec<f64>> {
        let mut comps = Vec::with_capacity(self.d);
        let mut a = 0;
        while a < self.d {
            if a + 1 < self.d {
                let (x, y) =
                    self.inverse_pair(&self.derivative_hat(hat, a), &self.derivative_hat(hat, a + 1));
                comps.push(x);
                comps.push(y);
                a += 2;
            } else {
                let z = self.inverse_complex(self.derivative_hat(hat, a));
                comps.push(z.into_iter().map(|v| v.re).collect());
                a += 1;
            }
        }
        comps
    }

    /// Spectrum of `Σ_a ∂_a v_a` from real components.
    pub fn divergence_hat(&self, comps: &[&[f64]]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        for (a, c) in comps.iter().enumerate() {
            let hat = self.forward(c);
            for ((o, z), &w) in out.iter_mut().zip(&hat).zip(&self.deriv[a]) {
                *o += C64::new(-w * z.im, w * z.re);
            }
        }
        out
    }

    /// Zero the modes outside the two-thirds band in place.
    pub fn dealias_hat(&self, hat: &mut [C64]) {
        for (z, &k) in hat.iter_mut().zip(&self.keep) {
            if !k {
                *z = C64::new(0.0, 0.0);
            }
        }
    }
}

fn plan_for(u: &Field) -> Result<Arc<Spectral>> {
    u.check_finite("spectral operator input")?;
    Ok(Spectral::for_grid(&u.grid))
}

/// Spectral gradient; each component has zero mean.
pub fn gradient(u: &Field) -> Result<VectorField> {
    let sp = plan_for(u)?;
    let hat = sp.forward(&u.values);
    let comps = sp
        .gradient_from_hat(&hat)
        .into_iter()
        .map(|v| Field::from_raw(u.grid, v))
        .collect();
    Ok(VectorField { components: comps })
}

/// Partial derivative along one axis.
pub fn partial(u: &Field, axis: usize) -> Result<Field> {
    let sp = plan_for(u)?;
    let hat = sp.forward(&u.values);
    Ok(Field::from_raw(u.grid, sp.inverse(sp.derivative_hat(&hat, axis))?))
}

pub fn laplacian(u: &Field) -> Result<Field> {
    let sp = plan_for(u)?;
    let hat: Vec<C64> =
        sp.forward(&u.values).into_iter().zip(sp.k2()).map(|(z, &k)| -z * k).collect();
    Ok(Field::from_raw(u.grid, sp.inverse(hat)?))
}

pub fn divergence(v: &VectorField) -> Result<Field> {
    for c in &v.components {
        c.check_finite("divergence input")?;
    }
    let g = v.grid();
    let sp = Spectral::for_grid(&g);
    let comps: Vec<&[f64]> = v.components.iter().map(|c| c.values.as_slice()).collect();
    Ok(Field::from_raw(g, sp.inverse(sp.divergence_hat(&comps))?))
}

/// Symmetric matrix of second derivatives, `hess[i][j] = ∂_i∂_j u`.
///
/// Mixed derivatives use the odd-derivative symbols per axis; pure second
/// derivatives keep the Nyquist mode.
pub fn hessian(u: &Field) -> Result<Vec<Vec<Field>>> {
    let sp = plan_for(u)?;
    let d = u.grid.d;
    let hat = sp.forward(&u.values);
    let mut out = vec![vec![Field::zeros(u.grid); d]; d];
    for i in 0..d {
        for j in i..d {
            let h: Vec<C64> = if i == j {
                let tab = pure_second_symbol(&sp, i);
                hat.iter().zip(&tab).map(|(&z, &w)| -z * w).collect()
            } else {
                let di = sp.deriv_symbol(i);
                let dj = sp.deriv_symbol(j);
                hat.iter().zip(di.iter().zip(dj)).map(|(&z, (&a, &b))| -z * (a * b)).collect()
            };
            let f = Field::from_raw(u.grid, sp.inverse(h)?);
            out[j][i] = f.clone();
            out[i][j] = f;
        }
    }
    Ok(out)
}

fn pure_second_symbol(sp: &Spectral, axis: usize) -> Vec<f64> {
    let n = sp.n;
    let d = sp.d;
    let stride = n.pow((d - 1 - axis) as u32);
    (0..sp.len())
        .map(|idx| {
            let k = wavenumber((idx / stride) % n, n) as f64;
            (2.0 * PI * k).powi(2)
        })
        .collect()
}

/// Heat semigroup: multiply mode `k` by `exp(−|2πk|² s)`.
pub fn heat_mollify(u: &Field, s: f64) -> Result<Field> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(LabError::param("s", format!("{s} must be finite and >= 0")));
    }
    if s == 0.0 {
        return Ok(u.clone());
    }
    let sp = plan_for(u)?;
    let hat: Vec<C64> =
        sp.forward(&u.values).into_iter().zip(sp.k2()).map(|(z, &k)| z * (-k * s).exp()).collect();
    Ok(Field::from_raw(u.grid, sp.inverse(hat)?))
}

/// Two-thirds rule projection.
pub fn dealias(u: &Field) -> Result<Field> {
    let sp = plan_for(u)?;
    let mut hat = sp.forward(&u.values);
    sp.dealias_hat(&mut hat);
    Ok(Field::from_raw(u.grid, sp.inverse(hat)?))
}

/// Periodic translation by a lattice offset: `out(x) = u(x − ξ·dx)`.
pub fn shift(u: &Field, xi: &[i64]) -> Field {
    let g = u.grid;
    let n = g.n as i64;
    let mut out = vec![0.0; g.points()];
    for (idx, o) in out.iter_mut().enumerate() {
        let mi = g.multi_index(idx);
        let mut src = [0usize; 3];
        for a in 0..g.d {
            let off = xi.get(a).copied().unwrap_or(0);
            src[a] = (mi[a] as i64 - off).rem_euclid(n) as usize;
        }
        *o = u.values[g.flat_index(&src)];
    }
    Field::from_raw(g, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n, 1.0, 1).unwrap()
    }

    fn trig_poly(grid: TorusGrid, max_mode: i64, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for _ in 0..6 {
            let k: Vec<i64> = (0..grid.d).map(|_| rng.random_range(-max_mode..=max_mode)).collect();
            terms.push((k, rng.random_range(-1.0..1.0), rng.random_range(0.0..6.28)));
        }
        Field::from_fn(grid, |x| {
            terms
                .iter()
                .map(|(k, a, ph)| {
                    let arg: f64 = k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum();
                    a * (2.0 * PI * arg + ph).cos()
                })
                .sum()
        })
    }

    #[test]
    fn cosine_derivative_exact() {
        let g = g1(32);
        let u = Field::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        let du = gradient(&u).unwrap();
        let exact = Field::from_fn(g, |x| -2.0 * PI * (2.0 * PI * x[0]).sin());
        assert!(du.components[0].sub(&exact).max_abs() <= 1e-10);
    }

    #[test]
    fn constant_gradient_is_zero() {
        let g = TorusGrid::new(2, 16, 1.0, 1).unwrap();
        let du = gradient(&Field::constant(g, 5.0)).unwrap();
        for c in &du.components {
            assert!(c.max_abs() <= 1e-12);
        }
        assert!(laplacian(&Field::constant(g, 5.0)).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn tensor_mode_gradient_2d() {
        let g = TorusGrid::new(2, 32, 1.0, 1).unwrap();
        let u = Field::from_fn(g, |x| (4.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
        let du = gradient(&u).unwrap();
        let e0 = Field::from_fn(g, |x| 4.0 * PI * (4.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos());
        let e1 = Field::from_fn(g, |x| -2.0 * PI * (4.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        assert!(du.components[0].sub(&e0).max_abs() <= 1e-10);
        assert!(du.components[1].sub(&e1).max_abs() <= 1e-10);
    }

    #[test]
    fn gradient_3d_matches_partials() {
        let g = TorusGrid::new(3, 8, 1.0, 1).unwrap();
        let u = trig_poly(g, 2, 3);
        let du = gradient(&u).unwrap();
        for a in 0..3 {
            assert!(du.components[a].sub(&partial(&u, a).unwrap()).max_abs() < 1e-11);
        }
    }

    #[test]
    fn laplacian_of_cosine() {
        let g = g1(32);
        let u = Field::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        let exact = u.scale(-4.0 * PI * PI);
        assert!(laplacian(&u).unwrap().sub(&exact).max_abs() <= 1e-10);
    }

    #[test]
    fn laplacian_against_finite_differences() {
        // second-order central differences converge at rate dx²
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let g = TorusGrid::new(2, n, 1.0, 1).unwrap();
            let u = trig_poly(g, 5, 11);
            let lap = laplacian(&u).unwrap();
            let h2 = (n * n) as f64;
            let mut err = 0.0f64;
            for idx in 0..g.points() {
                let mi = g.multi_index(idx);
                let mut fd = 0.0;
                for a in 0..2 {
                    let mut p = mi;
                    let mut m = mi;
                    p[a] = (mi[a] + 1) % n;
                    m[a] = (mi[a] + n - 1) % n;
                    fd += (u.values[g.flat_index(&p)] - 2.0 * u.values[idx] + u.values[g.flat_index(&m)]) * h2;
                }
                err = err.max((fd - lap.values[idx]).abs());
            }
            errs.push(err);
        }
        let rate = errs[0] / errs[1];
        assert!(rate > 3.5 && rate < 4.5, "fd rate {rate}");
    }

    #[test]
    fn laplacian_is_div_grad() {
        let g = TorusGrid::new(2, 32, 1.0, 1).unwrap();
        let u = trig_poly(g, 5, 1);
        let a = laplacian(&u).unwrap();
        let b = divergence(&gradient(&u).unwrap()).unwrap();
        assert!(a.sub(&b).max_abs() <= 1e-10 * a.max_abs().max(1.0));
    }

    #[test]
    fn hessian_trace_is_laplacian() {
        let g = TorusGrid::new(2, 32, 1.0, 1).unwrap();
        let u = trig_poly(g, 5, 2);
        let h = hessian(&u).unwrap();
        let tr = h[0][0].add(&h[1][1]);
        assert!(tr.sub(&laplacian(&u).unwrap()).max_abs() < 1e-9);
        assert_eq!(h[0][1], h[1][0]);
    }

    #[test]
    fn heat_single_mode_decay() {
        let g = g1(32);
        let u = Field::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        let v = heat_mollify(&u, 1.0).unwrap();
        let exact = u.scale((-4.0 * PI * PI).exp());
        assert!(v.sub(&exact).max_abs() < 1e-15);
        assert_eq!(heat_mollify(&u, 0.0).unwrap(), u);
        assert!(heat_mollify(&u, -1.0).is_err());
    }

    #[test]
    fn heat_preserves_mean_and_semigroup() {
        let g = TorusGrid::new(2, 16, 1.0, 1).unwrap();
        let u = trig_poly(g, 4, 5).map(|v| v + 0.7);
        let v = heat_mollify(&u, 0.3).unwrap();
        assert!((v.mean() - u.mean()).abs() < 1e-12);
        let a = heat_mollify(&u, 0.003).unwrap();
        let b = heat_mollify(&heat_mollify(&u, 0.001).unwrap(), 0.002).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-12);
    }

    #[test]
    fn shift_identities() {
        let g = TorusGrid::new(2, 16, 1.0, 1).unwrap();
        let u = trig_poly(g, 4, 9);
        assert_eq!(shift(&u, &[0, 0]), u);
        assert_eq!(shift(&u, &[16, -16]), u);
        let s = shift(&u, &[3, 5]);
        assert!((s.dot(&s) - u.dot(&u)).abs() < 1e-12);
        // out(x) = u(x − ξ dx)
        let mi = [4usize, 7];
        let src = [1usize, 2];
        assert_eq!(s.values[g.flat_index(&mi)], u.values[g.flat_index(&src)]);
    }

    #[test]
    fn dealias_removes_high_modes() {
        let g = g1(32);
        let low = Field::from_fn(g, |x| (2.0 * PI * 3.0 * x[0]).sin());
        let high = Field::from_fn(g, |x| (2.0 * PI * 12.0 * x[0]).cos());
        let out = dealias(&low.add(&high)).unwrap();
        assert!(out.sub(&low).max_abs() < 1e-13);
    }

    #[test]
    fn nonfinite_rejected() {
        let g = g1(8);
        let mut u = Field::zeros(g);
        u.values[2] = f64::INFINITY;
        assert!(matches!(gradient(&u), Err(LabError::NonFinite(_))));
    }

    #[test]
    fn imaginary_residue_detected() {
        let g = g1(8);
        let sp = Spectral::for_grid(&g);
        let mut hat = vec![C64::new(0.0, 0.0); 8];
        hat[1] = C64::new(8.0, 0.0);
        assert!(matches!(sp.inverse(hat), Err(LabError::ImaginaryResidue(_))));
    }

    #[test]
    fn gradient_components_have_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = TorusGrid::new(2, 16, 1.0, 1).unwrap();
        let u = Field::new(g, (0..256).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        for c in gradient(&u).unwrap().components {
            assert!(c.mean().abs() < 1e-12);
        }
        assert!(laplacian(&u).unwrap().mean().abs() < 1e-12);
    }
}
