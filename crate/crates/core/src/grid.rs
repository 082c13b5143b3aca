//! Periodic lattice on the unit torus and the sampled fields living on it.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Space-time lattice: `n^d` points on `[0,1)^d` and `nt` steps on `[0, t_final]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub d: usize,
    pub n: usize,
    pub t_final: f64,
    pub nt: usize,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize, t_final: f64, nt: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(LabError::param("d", format!("{d} not in 1..=3")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(LabError::param("n", format!("{n} must be a power of two >= 8")));
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(LabError::param("T", format!("{t_final} must be positive")));
        }
        if nt == 0 {
            return Err(LabError::param("nt", "must be >= 1"));
        }
        Ok(TorusGrid { d, n, t_final, nt })
    }

    /// Same spatial lattice with a different time discretization.
    pub fn with_time(&self, t_final: f64, nt: usize) -> Result<Self> {
        TorusGrid::new(self.d, self.n, t_final, nt)
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.nt as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.nt {
            self.t_final
        } else {
            j as f64 * self.dt()
        }
    }

    /// Number of spatial samples, `n^d`.
    pub fn points(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    pub fn same_space(&self, other: &TorusGrid) -> bool {
        self.d == other.d && self.n == other.n
    }

    /// Multi-index of a flat index (last axis fastest).
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.d).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        let mut idx = 0;
        for &i in mi.iter().take(self.d) {
            idx = idx * self.n + i;
        }
        idx
    }

    /// Coordinates of a lattice point.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let dx = self.dx();
        [mi[0] as f64 * dx, mi[1] as f64 * dx, mi[2] as f64 * dx]
    }
}

/// Periodic (wrap-around) separation of two points on the unit circle, in `[-1/2, 1/2)`.
pub fn periodic_delta(a: f64, b: f64) -> f64 {
    let mut r = a - b;
    r -= r.round();
    r
}

/// Scalar samples on the spatial lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(LabError::GridMismatch(format!(
                "{} samples for a lattice of {}",
                values.len(),
                grid.points()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("field samples".into()));
        }
        Ok(Field { grid, values })
    }

    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.points());
        Field { grid, values }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.points())
            .map(|i| {
                let x = grid.coords(i);
                f(&x[..grid.d])
            })
            .collect();
        Field { grid, values }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Field { grid, values: vec![c; grid.points()] }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Field::constant(grid, 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(LabError::NonFinite(what.to_string()))
        }
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_space(&other.grid) {
            Ok(())
        } else {
            Err(LabError::GridMismatch(format!(
                "(d={}, n={}) vs (d={}, n={})",
                self.grid.d, self.grid.n, other.grid.d, other.grid.n
            )))
        }
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Mean over the torus; equals the integral since the volume is one.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert!(self.grid.same_space(&other.grid));
        Field::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// Lattice integral of the product, `∫ u v`.
    pub fn dot(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            * self.grid.cell_volume()
    }
}

/// `d` scalar components sharing one lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub components: Vec<Field>,
}

impl VectorField {
    pub fn new(components: Vec<Field>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| LabError::param("components", "empty vector field"))?;
        if components.len() != first.grid.d {
            return Err(LabError::GridMismatch(format!(
                "{} components in dimension {}",
                components.len(),
                first.grid.d
            )));
        }
        for c in &components[1..] {
            first.check_same_grid(c)?;
        }
        Ok(VectorField { components })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        VectorField { components: (0..grid.d).map(|_| Field::zeros(grid)).collect() }
    }

    pub fn constant(grid: TorusGrid, c: &[f64]) -> Self {
        VectorField {
            components: (0..grid.d).map(|a| Field::constant(grid, c[a])).collect(),
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.components[0].grid
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Vector at one lattice point.
    pub fn at(&self, idx: usize) -> [f64; 3] {
        let mut p = [0.0; 3];
        for (a, c) in self.components.iter().enumerate() {
            p[a] = c.values[idx];
        }
        p
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Field {
        let g = self.grid();
        let values = (0..g.points())
            .map(|i| self.components.iter().map(|c| c.values[i] * c.values[i]).sum::<f64>().sqrt())
            .collect();
        Field::from_raw(g, values)
    }

    pub fn scale(&self, c: f64) -> VectorField {
        VectorField { components: self.components.iter().map(|f| f.scale(c)).collect() }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            components: self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude().max()
    }
}

/// Sequence of `nt + 1` slices, slice `j` at time `j·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub grid: TorusGrid,
    pub slices: Vec<Field>,
}

impl SpaceTimeField {
    pub fn new(grid: TorusGrid, slices: Vec<Field>) -> Result<Self> {
        if slices.len() != grid.nt + 1 {
            return Err(LabError::GridMismatch(format!(
                "{} slices for nt = {}",
                slices.len(),
                grid.nt
            )));
        }
        for s in &slices {
            if !s.grid.same_space(&grid) {
                return Err(LabError::GridMismatch("slice lattice differs".into()));
            }
        }
        Ok(SpaceTimeField { grid, slices })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64], f64) -> f64) -> Self {
        let slices = (0..=grid.nt)
            .map(|j| {
                let t = grid.time(j);
                Field::from_fn(grid, |x| f(x, t))
            })
            .collect();
        SpaceTimeField { grid, slices }
    }

    pub fn from_slice_fn(grid: TorusGrid, f: impl Fn(f64) -> Field) -> Self {
        let slices = (0..=grid.nt).map(|j| f(grid.time(j))).collect();
        SpaceTimeField { grid, slices }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        SpaceTimeField { grid, slices: vec![Field::constant(grid, c); grid.nt + 1] }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        SpaceTimeField::constant(grid, 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> SpaceTimeField {
        SpaceTimeField { grid: self.grid, slices: self.slices.iter().map(|s| s.map(f)).collect() }
    }

    pub fn zip_map(&self, other: &SpaceTimeField, f: impl Fn(f64, f64) -> f64 + Copy) -> SpaceTimeField {
        SpaceTimeField {
            grid: self.grid,
            slices: self.slices.iter().zip(&other.slices).map(|(a, b)| a.zip_map(b, f)).collect(),
        }
    }

    pub fn sub(&self, other: &SpaceTimeField) -> SpaceTimeField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.slices.iter().fold(0.0, |m, s| m.max(s.max_abs()))
    }

    pub fn max(&self) -> f64 {
        self.slices.iter().fold(f64::NEG_INFINITY, |m, s| m.max(s.max()))
    }

    pub fn min(&self) -> f64 {
        self.slices.iter().fold(f64::INFINITY, |m, s| m.min(s.min()))
    }

    pub fn last(&self) -> &Field {
        self.slices.last().expect("nt + 1 >= 2 slices")
    }

    /// Trapezoid-in-time, lattice-in-space integral of a per-slice quantity.
    pub fn time_integral(&self, per_slice: impl Fn(&Field) -> f64) -> f64 {
        trapezoid(&self.slices.iter().map(per_slice).collect::<Vec<_>>(), self.grid.dt())
    }

    /// `∬ u dx dt`.
    pub fn integral(&self) -> f64 {
        self.time_integral(|s| s.integral())
    }

    /// Linear interpolation in time.
    pub fn at_time(&self, t: f64) -> Field {
        let dt = self.grid.dt();
        let s = (t / dt).clamp(0.0, self.grid.nt as f64);
        let j = (s.floor() as usize).min(self.grid.nt.saturating_sub(1));
        let w = s - j as f64;
        if w <= 0.0 {
            return self.slices[j].clone();
        }
        if w >= 1.0 {
            return self.slices[j + 1].clone();
        }
        self.slices[j].zip_map(&self.slices[j + 1], |a, b| (1.0 - w) * a + w * b)
    }

    /// Reverse the slice order, `s = T − t`.
    pub fn time_reversed(&self) -> SpaceTimeField {
        let mut slices = self.slices.clone();
        slices.reverse();
        SpaceTimeField { grid: self.grid, slices }
    }
}

/// Composite trapezoid rule for uniformly spaced samples.
pub fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        k => {
            let inner: f64 = samples[1..k - 1].iter().sum();
            h * (inner + 0.5 * (samples[0] + samples[k - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(TorusGrid::new(1, 12, 1.0, 4).is_err());
        assert!(TorusGrid::new(1, 4, 1.0, 4).is_err());
        assert!(TorusGrid::new(4, 8, 1.0, 4).is_err());
        assert!(TorusGrid::new(2, 8, 0.0, 4).is_err());
        assert!(TorusGrid::new(2, 8, 1.0, 0).is_err());
        let g = TorusGrid::new(2, 16, 0.5, 10).unwrap();
        assert_eq!(g.dx() * g.n as f64, 1.0);
        assert_eq!(g.points(), 256);
        assert_eq!(g.time(10), 0.5);
    }

    #[test]
    fn index_round_trip() {
        let g = TorusGrid::new(3, 8, 1.0, 1).unwrap();
        for i in [0, 7, 8, 63, 64, 511] {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.coords(1), [0.0, 0.0, 0.125]);
    }

    #[test]
    fn field_rejects_nan() {
        let g = TorusGrid::new(1, 8, 1.0, 1).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(g, v), Err(LabError::NonFinite(_))));
        assert!(Field::new(g, vec![0.0; 7]).is_err());
    }

    #[test]
    fn time_integral_of_linear_ramp() {
        let g = TorusGrid::new(1, 8, 1.0, 16).unwrap();
        let u = SpaceTimeField::from_fn(g, |_, t| t);
        assert!((u.integral() - 0.5).abs() < 1e-14);
        let mid = u.at_time(0.3);
        assert!((mid.values[0] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn periodic_delta_wraps() {
        assert!((periodic_delta(0.95, 0.05) + 0.1).abs() < 1e-15);
        assert!((periodic_delta(0.3, 0.1) - 0.2).abs() < 1e-15);
    }
}
