//! Two-stage exponential steppers for `∂_t û = −|2πk|² û − N(û, t)`.
//!
//! Both variants integrate the diffusion exactly per mode.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exponential time differencing, second-order Runge-Kutta stage
    /// (`φ₁`, `φ₂` weights).
    #[default]
    Etd2,
    /// Integrating factor with the two-stage SSP Runge-Kutta stage.
    IfSsp2,
}

/// Per-mode weights for one step size.
pub struct StepTables {
    pub h: f64,
    e: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
}

impl StepTables {
    pub fn new(k2: &[f64], h: f64) -> Self {
        let mut e = Vec::with_capacity(k2.len());
        let mut phi1 = Vec::with_capacity(k2.len());
        let mut phi2 = Vec::with_capacity(k2.len());
        for &k in k2 {
            let z = k * h;
            let ez = (-z).exp();
            e.push(ez);
            if z < 1e-4 {
                phi1.push(1.0 - z / 2.0 + z * z / 6.0);
                phi2.push(0.5 - z / 6.0 + z * z / 24.0);
            } else {
                phi1.push((1.0 - ez) / z);
                phi2.push((ez - 1.0 + z) / (z * z));
            }
        }
        StepTables { h, e, phi1, phi2 }
    }

    /// Advance `u` from `t` to `t + h`; `n0` is `N(u, t)`.
    pub fn step<F>(&self, scheme: Integrator, u: &mut [C64], n0: &[C64], t: f64, mut nonlinear: F) -> Result<()>
    where
        F: FnMut(&[C64], f64) -> Result<Vec<C64>>,
    {
        let h = self.h;
        match scheme {
            Integrator::Etd2 => {
                let a: Vec<C64> = u
                    .iter()
                    .zip(n0)
                    .enumerate()
                    .map(|(i, (&v, &n))| v * self.e[i] - n * (h * self.phi1[i]))
                    .collect();
                let na = nonlinear(&a, t + h)?;
                for (i, v) in u.iter_mut().enumerate() {
                    *v = a[i] - (na[i] - n0[i]) * (h * self.phi2[i]);
                }
            }
            Integrator::IfSsp2 => {
                let u1: Vec<C64> =
                    u.iter().zip(n0).zip(&self.e).map(|((&v, &n), &e)| (v - n * h) * e).collect();
                let n1 = nonlinear(&u1, t + h)?;
                for (i, v) in u.iter_mut().enumerate() {
                    *v = 0.5 * (*v * self.e[i]) + 0.5 * (u1[i] - n1[i] * h);
                }
            }
        }
        Ok(())
    }
}
