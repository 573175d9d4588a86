//! Numerical laboratory for one-dimensional systems of cubic derivative
//! nonlinear Schrödinger equations
//!
//! ```text
//! i∂ₜu_j + (1/2m_j)∂ₓ²u_j = F_j(u, ∂ₓu),   j = 1..N.
//! ```
//!
//! * [`nonlinearity`] stores `F` as coefficient data and evaluates its symbol.
//! * [`structure`] decides the resonance, gauge, dissipative and null conditions.
//! * [`solver`] integrates the system pseudo-spectrally.
//! * [`analysis`] extracts profiles, residuals, decay fits and scattering data.

pub mod analysis;
pub mod error;
pub mod models;
pub mod nonlinearity;
pub mod solver;
pub mod structure;

pub use error::{Error, Result};
pub use nonlinearity::{CubicSystem, Factor, MassVector, Monomial};
pub use structure::{ConditionReport, HermitianForm, SamplePlan};
