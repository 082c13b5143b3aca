//! Numerical laboratory for viscous Hamilton-Jacobi equations, adjoint
//! Fokker-Planck equations and mean field games on the flat torus.

pub mod error;
pub mod exponents;
pub mod fp;
pub mod grid;
pub mod hamiltonian;
pub mod hj;
pub mod interpolation;
pub mod lab;
pub mod mfg;
pub mod norms;
pub mod runner;
mod serde_f64;
pub mod spectral;
pub mod stepper;

pub use error::{LabError, Result};
pub use grid::{Field, SpaceTimeField, TorusGrid, VectorField};
