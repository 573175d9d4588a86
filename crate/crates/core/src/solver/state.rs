use num_complex::Complex64;
use serde::Serialize;

use super::grid::{Grid1D, Spectral};
use crate::error::{Error, Result};

/// `N` complex components sampled on the grid nodes at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub values: Vec<Vec<Complex64>>,
}

impl FieldState {
    pub fn new(t: f64, values: Vec<Vec<Complex64>>) -> Result<Self> {
        let state = Self { t, values };
        state.validate()?;
        Ok(state)
    }

    pub fn zeros(components: usize, points: usize) -> Self {
        Self {
            t: 0.0,
            values: vec![vec![Complex64::new(0.0, 0.0); points]; components],
        }
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    pub fn points(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::Precondition(format!("invalid time {}", self.t)));
        }
        let np = self.points();
        if self.values.iter().any(|c| c.len() != np) {
            return Err(Error::Precondition("components have different lengths".into()));
        }
        if !self.is_finite() {
            return Err(Error::NonFinite { t: self.t });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_against(&self, components: usize, grid: &Grid1D) -> Result<()> {
        if self.components() != components {
            return Err(Error::Dimension {
                expected: components,
                got: self.components(),
            });
        }
        if self.points() != grid.points() {
            return Err(Error::Dimension {
                expected: grid.points(),
                got: self.points(),
            });
        }
        Ok(())
    }

    pub fn observables(&self, grid: &Grid1D, spectral: &Spectral) -> Observables {
        let mut obs = Observables {
            t: self.t,
            l2: Vec::new(),
            linf: Vec::new(),
            w1inf: Vec::new(),
            j_l2: None,
        };
        for u in &self.values {
            let ux = spectral.derivative(grid, u);
            let linf = sup_norm(u);
            obs.l2.push(l2_norm(u, grid.dx()));
            obs.linf.push(linf);
            obs.w1inf.push(linf + sup_norm(&ux));
        }
        obs
    }

    /// Largest modulus over all components.
    pub fn sup(&self) -> f64 {
        self.values.iter().map(|u| sup_norm(u)).fold(0.0, f64::max)
    }
}

/// Per-component norms recorded along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observables {
    pub t: f64,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    /// `‖u‖_∞ + ‖∂ₓu‖_∞`
    pub w1inf: Vec<f64>,
    pub j_l2: Option<Vec<f64>>,
}

impl Observables {
    pub fn total_l2(&self) -> f64 {
        self.l2.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_linf(&self) -> f64 {
        self.linf.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn l2_norm(u: &[Complex64], dx: f64) -> f64 {
    (u.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt()
}

pub fn sup_norm(u: &[Complex64]) -> f64 {
    u.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
