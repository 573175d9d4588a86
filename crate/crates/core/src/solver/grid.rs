use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic grid on `[-L/2, L/2)` standing in for the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    length: f64,
    x: Vec<f64>,
    k: Vec<f64>,
}

impl Grid1D {
    pub const MIN_POINTS: usize = 16;

    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Grid(format!("length must be positive, got {length}")));
        }
        if points < Self::MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::Grid(format!(
                "point count must be a power of two >= {}, got {points}",
                Self::MIN_POINTS
            )));
        }
        let dx = length / points as f64;
        let x = (0..points).map(|n| -0.5 * length + n as f64 * dx).collect();
        let k = (0..points)
            .map(|n| 2.0 * PI * signed_index(n, points) as f64 / length)
            .collect();
        Ok(Self { length, x, k })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.x.len()
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points() as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Nyquist wavenumber `π Nx / L`.
    pub fn k_max(&self) -> f64 {
        PI * self.points() as f64 / self.length
    }

    /// Largest wavenumber kept by the 2/3 rule.
    pub fn k_dealiased(&self) -> f64 {
        2.0 / 3.0 * self.k_max()
    }

    /// True for modes kept by the 2/3 rule (`|n| < Nx/3`).
    pub fn dealias_mask(&self) -> Vec<bool> {
        let n = self.points();
        (0..n)
            .map(|i| 3 * signed_index(i, n).unsigned_abs() < n as u64)
            .collect()
    }

    /// `ik` with the Nyquist mode zeroed.
    pub fn derivative_symbol(&self) -> Vec<Complex64> {
        let n = self.points();
        self.k
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                if i == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k)
                }
            })
            .collect()
    }
}

pub(crate) fn signed_index(n: usize, points: usize) -> i64 {
    if n < points / 2 {
        n as i64
    } else {
        n as i64 - points as i64
    }
}

/// Forward/inverse FFT pair for one grid size. The inverse is normalized.
#[derive(Clone)]
pub struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("len", &self.forward.len())
            .finish()
    }
}

impl Spectral {
    pub fn new(points: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
            scale: 1.0 / points as f64,
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }

    pub fn to_spectral(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        buf
    }

    pub fn to_physical(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coeffs.to_vec();
        self.inverse(&mut buf);
        buf
    }

    /// Spectral derivative of a physical-space field.
    pub fn derivative(&self, grid: &Grid1D, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = self.to_spectral(values);
        for (z, ik) in buf.iter_mut().zip(grid.derivative_symbol()) {
            *z *= ik;
        }
        self.inverse(&mut buf);
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(10.0, 8).is_err());
        assert!(Grid1D::new(10.0, 100).is_err());
        assert!(Grid1D::new(-1.0, 64).is_err());
        let g = Grid1D::new(2.0 * PI, 16).unwrap();
        assert_eq!(g.nodes()[0], -PI);
        assert_eq!(g.wavenumbers()[1], 1.0);
        assert_eq!(g.wavenumbers()[15], -1.0);
        assert_eq!(g.wavenumbers()[8], -8.0);
        let kept = g.dealias_mask().iter().filter(|b| **b).count();
        // |n| <= 5 for Nx = 16
        assert_eq!(kept, 11);
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let g = Grid1D::new(2.0 * PI, 64).unwrap();
        let s = Spectral::new(64);
        let u: Vec<Complex64> = g
            .nodes()
            .iter()
            .map(|x| Complex64::new((3.0 * x).sin(), 0.0))
            .collect();
        let du = s.derivative(&g, &u);
        for (x, d) in g.nodes().iter().zip(&du) {
            assert!((d.re - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
        }
    }
}
