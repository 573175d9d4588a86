use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::nonlinearity::{CubicSystem, MassVector};
use crate::solver::operators::{
    boundary_supported, propagate_component, scaled_fourier, stationary_phase_approximation,
};
use crate::solver::{FieldState, Grid1D, Solver};

pub const DEFAULT_XI_POINTS: usize = 257;

/// `α(t, ξ)` for all components on a shared frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileState {
    pub t: f64,
    pub xi: Vec<f64>,
    pub alpha: Vec<Vec<Complex64>>,
    /// Set when some component was not negligible at the box boundary.
    pub boundary_warning: bool,
}

impl ProfileState {
    pub fn new(t: f64, xi: Vec<f64>, alpha: Vec<Vec<Complex64>>) -> Result<Self> {
        if xi.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("xi grid must be strictly increasing".into()));
        }
        if alpha.iter().any(|a| a.len() != xi.len()) {
            return Err(Error::Dimension {
                expected: xi.len(),
                got: alpha.iter().map(Vec::len).find(|&l| l != xi.len()).unwrap_or(0),
            });
        }
        if alpha
            .iter()
            .flatten()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite { t });
        }
        Ok(Self {
            t,
            xi,
            alpha,
            boundary_warning: false,
        })
    }

    pub fn components(&self) -> usize {
        self.alpha.len()
    }

    /// `α(t, ξ_i)` as an `N`-vector.
    pub fn at(&self, i: usize) -> Vec<Complex64> {
        self.alpha.iter().map(|a| a[i]).collect()
    }

    pub fn sup(&self) -> f64 {
        self.alpha.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `sup_ξ |α(ξ) - β(ξ)|` over all components.
    pub fn sup_distance(&self, other: &ProfileState) -> f64 {
        self.alpha
            .iter()
            .flatten()
            .zip(other.alpha.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Discrete `L²(ξ)` distance (trapezoid-free Riemann sum).
    pub fn l2_distance(&self, other: &ProfileState) -> f64 {
        let dxi = if self.xi.len() > 1 {
            (self.xi[self.xi.len() - 1] - self.xi[0]) / (self.xi.len() - 1) as f64
        } else {
            1.0
        };
        let s: f64 = self
            .alpha
            .iter()
            .flatten()
            .zip(other.alpha.iter().flatten())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * dxi).sqrt()
    }
}

/// `ρ(t, ξ)` on the profile grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub t: f64,
    pub xi: Vec<f64>,
    pub rho: Vec<Vec<Complex64>>,
}

impl ResidualField {
    pub fn sup(&self) -> f64 {
        self.rho.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Uniform grid on `[-Ξ, Ξ]` with `m_j Ξ ≤ (2/3) k_max` for every mass.
pub fn default_xi_grid(grid: &Grid1D, masses: &MassVector, points: usize) -> Vec<f64> {
    let xi_max = grid.k_dealiased() / masses.max_abs();
    uniform_grid(-xi_max, xi_max, points)
}

/// Pulls each component back along the free flow and takes its scaled
/// Fourier transform at the shared grid.
pub fn extract_profile(solver: &Solver, state: &FieldState, xi: &[f64]) -> Result<ProfileState> {
    if state.t < 1.0 {
        return Err(Error::Precondition(format!(
            "profiles are extracted for t >= 1, got t = {}",
            state.t
        )));
    }
    state.check_against(solver.system().n(), solver.grid())?;
    let grid = solver.grid();
    let spectral = solver.spectral();
    let mut warning = false;
    let alpha = state
        .values
        .iter()
        .zip(solver.masses().as_slice())
        .map(|(u, &m)| {
            warning |= !boundary_supported(u);
            let pulled = propagate_component(grid, spectral, u, m, -state.t);
            scaled_fourier(grid, &pulled, m, xi)
        })
        .collect();
    let mut p = ProfileState::new(state.t, xi.to_vec(), alpha)?;
    p.boundary_warning = warning;
    Ok(p)
}

/// `ρ_j = F_{m_j}U_{m_j}⁻¹[F_j(u, ∂ₓu)] - p_j(ξ; α)/t`, evaluated from the
/// right-hand side of the profile equation (no time differencing).
pub fn compute_residual(
    solver: &Solver,
    state: &FieldState,
    profile: &ProfileState,
) -> Result<ResidualField> {
    if (profile.t - state.t).abs() > 1e-12 * state.t.max(1.0) {
        return Err(Error::Precondition(format!(
            "profile at t = {} does not match state at t = {}",
            profile.t, state.t
        )));
    }
    let sys: &CubicSystem = solver.system();
    if profile.components() != sys.n() {
        return Err(Error::Dimension {
            expected: sys.n(),
            got: profile.components(),
        });
    }
    let grid = solver.grid();
    let spectral = solver.spectral();
    let t = state.t;
    let forcing = solver.nonlinear_field(state)?;
    let mut rho: Vec<Vec<Complex64>> = forcing
        .iter()
        .zip(solver.masses().as_slice())
        .map(|(f, &m)| {
            let pulled = propagate_component(grid, spectral, f, m, -t);
            scaled_fourier(grid, &pulled, m, &profile.xi)
        })
        .collect();
    for (i, &xi) in profile.xi.iter().enumerate() {
        let p = sys.symbol_p(xi, &profile.at(i))?;
        for (j, pj) in p.into_iter().enumerate() {
            rho[j][i] -= pj / t;
        }
    }
    Ok(ResidualField {
        t,
        xi: profile.xi.clone(),
        rho,
    })
}

/// `‖φ - M_m D F_m U_m⁻¹ φ‖_{L∞}` for component `j` of a state.
pub fn stationary_phase_error(solver: &Solver, state: &FieldState, j: usize) -> Result<f64> {
    state.check_against(solver.system().n(), solver.grid())?;
    if state.t <= 0.0 {
        return Err(Error::Precondition("requires t > 0".into()));
    }
    let m = solver.masses().get(j);
    let approx =
        stationary_phase_approximation(solver.grid(), solver.spectral(), &state.values[j], state.t, m);
    Ok(state.values[j]
        .iter()
        .zip(approx)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn profile_state_invariants() {
        let z = Complex64::new(1.0, 0.0);
        assert!(ProfileState::new(1.0, vec![0.0, 0.0], vec![vec![z; 2]]).is_err());
        assert!(ProfileState::new(1.0, vec![0.0, 1.0], vec![vec![z; 3]]).is_err());
        let p = ProfileState::new(1.0, vec![0.0, 1.0], vec![vec![z, 2.0 * z]]).unwrap();
        let q = ProfileState::new(2.0, vec![0.0, 1.0], vec![vec![z, z]]).unwrap();
        assert_eq!(p.sup(), 2.0);
        assert_eq!(p.sup_distance(&q), 1.0);
        assert!((p.l2_distance(&q) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grids() {
        assert_eq!(uniform_grid(-1.0, 1.0, 3), vec![-1.0, 0.0, 1.0]);
        let grid = Grid1D::new(100.0, 256).unwrap();
        let xi = default_xi_grid(&grid, &MassVector::new(vec![1.0, -3.0]).unwrap(), 11);
        assert!((3.0 * xi[10] - grid.k_dealiased()).abs() < 1e-12);
        assert_eq!(xi[0], -xi[10]);
    }

    #[test]
    fn free_runs_have_zero_residual_and_early_times_are_refused() {
        let grid = Grid1D::new(60.0, 256).unwrap();
        let solver = Solver::new(&models::free(vec![1.0]), grid.clone(), true);
        let mut s = crate::solver::InitialData::gaussian(2.0)
            .build(&grid, 1, 1.0)
            .unwrap();
        let xi = uniform_grid(-1.0, 1.0, 9);
        assert!(extract_profile(&solver, &s, &xi).is_err());
        s.t = 2.0;
        let p = extract_profile(&solver, &s, &xi).unwrap();
        assert!(!p.boundary_warning);
        assert_eq!(compute_residual(&solver, &s, &p).unwrap().sup(), 0.0);
        let mut later = p.clone();
        later.t = 3.0;
        assert!(compute_residual(&solver, &s, &later).is_err());
    }
}
