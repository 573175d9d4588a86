//! Pseudo-spectral integration of `i∂ₜu_j + (1/2m_j)∂ₓ²u_j = F_j(u, ∂ₓu)`
//! on a periodic box.
//!
//! In Fourier variables the system reads `∂ₜû_j = -ik²/(2m_j) û_j - iF̂_j`.
//! The linear part is integrated exactly through an integrating factor and
//! the nonlinear part by classical RK4 (Lawson's IF-RK4). Derivatives are
//! spectral and cubic products are dealiased with the 2/3 rule.
//!
//! The scheme is explicit in the nonlinearity; a practical step size is
//! `dt ≲ c / (‖u‖²_{W^{1,∞}} k_max)` with `c` of order one. This is not
//! enforced.

pub mod grid;
pub mod initial;
pub mod operators;
pub mod snapshot;
pub mod state;

use num_complex::Complex64;

pub use grid::{Grid1D, Spectral};
pub use initial::InitialData;
pub use operators::{apply_j_operator, free_multiplier, scaled_fourier, JField};
pub use state::{FieldState, Observables};

use crate::error::{Error, Result};
use crate::nonlinearity::{CubicSystem, MassVector};

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    /// Increasing times at which observables (and states) are recorded;
    /// each is snapped to the nearest step.
    pub sample_times: Vec<f64>,
    /// Amplitude of the initial data.
    pub eps: f64,
    /// Any sup norm above this value aborts the run.
    pub blowup_ceiling: f64,
    /// Record `‖J_{m_j} u_j‖_{L²}` at samples with `t > 0`.
    pub j_norms: bool,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            dealias: true,
            sample_times: vec![0.0, t_end],
            eps: 1.0,
            blowup_ceiling: 1e6,
            j_norms: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.dt <= self.t_end) {
            return Err(Error::Config(format!(
                "t_end = {} must be finite and at least dt = {}",
                self.t_end, self.dt
            )));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sample_times must be strictly increasing".into()));
        }
        if self
            .sample_times
            .iter()
            .any(|&s| !(0.0..=self.t_end + 0.5 * self.dt).contains(&s))
        {
            return Err(Error::Config("sample_times must lie in [0, t_end]".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Step indices of the sample times, deduplicated.
    pub fn sample_steps(&self) -> Vec<usize> {
        let total = self.steps();
        let mut steps: Vec<usize> = self
            .sample_times
            .iter()
            .map(|&s| ((s / self.dt).round() as usize).min(total))
            .collect();
        steps.dedup();
        steps
    }
}

/// Recorded output of [`Solver::run`].
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub observables: Vec<Observables>,
    pub states: Vec<FieldState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.observables.iter().map(|o| o.t).collect()
    }
}

/// Integrator for one system on one grid.
#[derive(Debug, Clone)]
pub struct Solver {
    sys: CubicSystem,
    grid: Grid1D,
    spectral: Spectral,
    dealias: bool,
    mask: Vec<bool>,
    dsym: Vec<Complex64>,
}

impl Solver {
    pub fn new(sys: &CubicSystem, grid: Grid1D, dealias: bool) -> Self {
        let spectral = Spectral::new(grid.points());
        let mask = if dealias {
            grid.dealias_mask()
        } else {
            vec![true; grid.points()]
        };
        let dsym = grid.derivative_symbol();
        Self {
            sys: sys.canonical(),
            grid,
            spectral,
            dealias,
            mask,
            dsym,
        }
    }

    pub fn system(&self) -> &CubicSystem {
        &self.sys
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn masses(&self) -> &MassVector {
        self.sys.masses()
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    fn to_spectral(&self, state: &FieldState) -> Vec<Vec<Complex64>> {
        state
            .values
            .iter()
            .map(|u| self.spectral.to_spectral(u))
            .collect()
    }

    fn to_physical(&self, t: f64, coeffs: &[Vec<Complex64>]) -> FieldState {
        FieldState {
            t,
            values: coeffs.iter().map(|c| self.spectral.to_physical(c)).collect(),
        }
    }

    fn linear_factors(&self, dt: f64) -> Vec<Vec<Complex64>> {
        self.masses()
            .as_slice()
            .iter()
            .map(|&m| {
                self.grid
                    .wavenumbers()
                    .iter()
                    .map(|&k| free_multiplier(k, m, dt))
                    .collect()
            })
            .collect()
    }

    fn apply_factors(coeffs: &mut [Vec<Complex64>], factors: &[Vec<Complex64>]) {
        for (c, f) in coeffs.iter_mut().zip(factors) {
            for (z, e) in c.iter_mut().zip(f) {
                *z *= e;
            }
        }
    }

    /// Exact linear flow over `dt`: mode `k` of component `j` is multiplied
    /// by `exp(-ik²dt/(2m_j))`.
    pub fn free_propagate(&self, state: &FieldState, dt: f64) -> Result<FieldState> {
        state.check_against(self.sys.n(), &self.grid)?;
        let mut coeffs = self.to_spectral(state);
        Self::apply_factors(&mut coeffs, &self.linear_factors(dt));
        Ok(self.to_physical(state.t + dt, &coeffs))
    }

    /// `u` and `∂ₓu` in physical space from spectral coefficients, with the
    /// dealiasing mask applied to the inputs.
    fn fields_from_spectral(&self, coeffs: &[Vec<Complex64>]) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
        let mut u = Vec::with_capacity(coeffs.len());
        let mut ux = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            let mut a: Vec<Complex64> = c
                .iter()
                .zip(&self.mask)
                .map(|(z, &keep)| if keep { *z } else { Complex64::new(0.0, 0.0) })
                .collect();
            let mut b: Vec<Complex64> = a.iter().zip(&self.dsym).map(|(z, d)| z * d).collect();
            self.spectral.inverse(&mut a);
            self.spectral.inverse(&mut b);
            u.push(a);
            ux.push(b);
        }
        (u, ux)
    }

    /// Pointwise `F_j(u, ∂ₓu)` on the grid.
    pub fn evaluate_nonlinearity(&self, u: &[Vec<Complex64>], ux: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let n = self.sys.n();
        let np = self.grid.points();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); np]; n];
        for m in self.sys.monomials() {
            let src: [(&[Complex64], bool); 3] = m.factors.map(|f| {
                let comp = f.k % n;
                let s: &[Complex64] = if f.deriv { &ux[comp] } else { &u[comp] };
                (s, f.k >= n)
            });
            let target = &mut out[m.target];
            for (i, acc) in target.iter_mut().enumerate() {
                let mut p = m.coeff;
                for (s, conj) in &src {
                    let v = s[i];
                    p *= if *conj { v.conj() } else { v };
                }
                *acc += p;
            }
        }
        out
    }

    /// `F_j(u, ∂ₓu)` in physical space for a state, with derivatives taken
    /// spectrally and the same dealiasing as the time stepper.
    pub fn nonlinear_field(&self, state: &FieldState) -> Result<Vec<Vec<Complex64>>> {
        state.check_against(self.sys.n(), &self.grid)?;
        let coeffs = self.to_spectral(state);
        let (u, ux) = self.fields_from_spectral(&coeffs);
        let mut f = self.evaluate_nonlinearity(&u, &ux);
        if self.dealias {
            for fj in f.iter_mut() {
                self.spectral.forward(fj);
                self.mask_in_place(fj);
                self.spectral.inverse(fj);
            }
        }
        Ok(f)
    }

    fn mask_in_place(&self, c: &mut [Complex64]) {
        for (z, &keep) in c.iter_mut().zip(&self.mask) {
            if !keep {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    fn rhs_spectral(&self, coeffs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        if self.sys.is_linear() {
            return vec![vec![Complex64::new(0.0, 0.0); self.grid.points()]; coeffs.len()];
        }
        let (u, ux) = self.fields_from_spectral(coeffs);
        let mut f = self.evaluate_nonlinearity(&u, &ux);
        for fj in f.iter_mut() {
            self.spectral.forward(fj);
            for (z, &keep) in fj.iter_mut().zip(&self.mask) {
                *z = if keep {
                    MINUS_I * *z
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
        }
        f
    }

    /// Spectral right-hand side `-iF̂_j` of the nonlinear part.
    pub fn nonlinear_rhs(&self, state: &FieldState) -> Result<Vec<Vec<Complex64>>> {
        state.check_against(self.sys.n(), &self.grid)?;
        Ok(self.rhs_spectral(&self.to_spectral(state)))
    }

    fn ifrk4_spectral(
        &self,
        coeffs: &mut [Vec<Complex64>],
        dt: f64,
        full: &[Vec<Complex64>],
        half: &[Vec<Complex64>],
    ) {
        let h = Complex64::new(dt, 0.0);
        let n1 = self.rhs_spectral(coeffs);

        let mut stage: Vec<Vec<Complex64>> = coeffs
            .iter()
            .zip(&n1)
            .map(|(c, a)| c.iter().zip(a).map(|(z, n)| z + 0.5 * h * n).collect())
            .collect();
        Self::apply_factors(&mut stage, half);
        let n2 = self.rhs_spectral(&stage);

        let mut e_half_u = coeffs.to_vec();
        Self::apply_factors(&mut e_half_u, half);
        let stage: Vec<Vec<Complex64>> = e_half_u
            .iter()
            .zip(&n2)
            .map(|(c, b)| c.iter().zip(b).map(|(z, n)| z + 0.5 * h * n).collect())
            .collect();
        let n3 = self.rhs_spectral(&stage);

        let mut e_full_u = coeffs.to_vec();
        Self::apply_factors(&mut e_full_u, full);
        let mut e_half_n3 = n3.clone();
        Self::apply_factors(&mut e_half_n3, half);
        let stage: Vec<Vec<Complex64>> = e_full_u
            .iter()
            .zip(&e_half_n3)
            .map(|(c, n)| c.iter().zip(n).map(|(z, w)| z + h * w).collect())
            .collect();
        let n4 = self.rhs_spectral(&stage);

        let mut e_full_n1 = n1;
        Self::apply_factors(&mut e_full_n1, full);
        let mut mid: Vec<Vec<Complex64>> = n2
            .iter()
            .zip(&n3)
            .map(|(b, c)| b.iter().zip(c).map(|(x, y)| x + y).collect())
            .collect();
        Self::apply_factors(&mut mid, half);
        let sixth = h / 6.0;
        for (j, c) in coeffs.iter_mut().enumerate() {
            for (i, z) in c.iter_mut().enumerate() {
                *z = e_full_u[j][i] + sixth * (e_full_n1[j][i] + 2.0 * mid[j][i] + n4[j][i]);
            }
        }
    }

    /// One integrating-factor RK4 step.
    pub fn step_ifrk4(&self, state: &FieldState, dt: f64) -> Result<FieldState> {
        state.check_against(self.sys.n(), &self.grid)?;
        let mut coeffs = self.to_spectral(state);
        let full = self.linear_factors(dt);
        let half = self.linear_factors(0.5 * dt);
        self.ifrk4_spectral(&mut coeffs, dt, &full, &half);
        let next = self.to_physical(state.t + dt, &coeffs);
        if !next.is_finite() {
            return Err(Error::NonFinite { t: next.t });
        }
        Ok(next)
    }

    pub fn observables(&self, state: &FieldState, j_norms: bool) -> Observables {
        let mut obs = state.observables(&self.grid, &self.spectral);
        if j_norms && state.t > 0.0 {
            let dx = self.grid.dx();
            obs.j_l2 = Some(
                state
                    .values
                    .iter()
                    .zip(self.masses().as_slice())
                    .map(|(u, &m)| {
                        let j = apply_j_operator(&self.grid, &self.spectral, u, state.t, m);
                        state::l2_norm(&j.values, dx)
                    })
                    .collect(),
            );
        }
        obs
    }

    /// `J_{m_j} u_j` for component `j` of a state at `t > 0`.
    pub fn apply_j(&self, state: &FieldState, j: usize) -> Result<JField> {
        state.check_against(self.sys.n(), &self.grid)?;
        if state.t <= 0.0 {
            return Err(Error::Precondition("J_m requires t > 0".into()));
        }
        if j >= self.sys.n() {
            return Err(Error::IndexOutOfRange {
                index: j,
                bound: self.sys.n(),
            });
        }
        Ok(apply_j_operator(
            &self.grid,
            &self.spectral,
            &state.values[j],
            state.t,
            self.masses().get(j),
        ))
    }

    /// Fixed-step integration from `initial` (at `t = 0`) to `config.t_end`.
    /// `observer` is called at every sample with the state and its
    /// observables.
    pub fn run_with<F>(
        &self,
        config: &SolverConfig,
        initial: &FieldState,
        mut observer: F,
    ) -> Result<FieldState>
    where
        F: FnMut(&FieldState, &Observables) -> Result<()>,
    {
        config.validate()?;
        initial.check_against(self.sys.n(), &self.grid)?;
        if initial.t != 0.0 {
            return Err(Error::Precondition(format!(
                "initial state must be at t = 0, got {}",
                initial.t
            )));
        }
        initial.validate()?;
        let total = config.steps();
        let samples = config.sample_steps();
        let mut next_sample = samples.iter().peekable();
        let full = self.linear_factors(config.dt);
        let half = self.linear_factors(0.5 * config.dt);

        let mut coeffs = self.to_spectral(initial);
        let mut state = initial.clone();
        let mut last_good = 0.0;
        for step in 0..=total {
            if step > 0 {
                self.ifrk4_spectral(&mut coeffs, config.dt, &full, &half);
                state = self.to_physical(step as f64 * config.dt, &coeffs);
                let sup = state.sup();
                if !sup.is_finite() || sup > config.blowup_ceiling {
                    return Err(Error::BlowUp {
                        last_good_time: last_good,
                        norm: sup,
                        ceiling: config.blowup_ceiling,
                    });
                }
                last_good = state.t;
            }
            if next_sample.peek() == Some(&&step) {
                next_sample.next();
                let obs = self.observables(&state, config.j_norms);
                observer(&state, &obs)?;
            }
        }
        Ok(state)
    }

    /// Like [`Solver::run_with`], collecting every sample.
    pub fn run(&self, config: &SolverConfig, initial: &FieldState) -> Result<Trajectory> {
        let mut traj = Trajectory::default();
        self.run_with(config, initial, |s, o| {
            traj.states.push(s.clone());
            traj.observables.push(o.clone());
            Ok(())
        })?;
        Ok(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn config_validation_and_sampling() {
        let mut c = SolverConfig::new(0.1, 1.0);
        assert_eq!(c.steps(), 10);
        c.sample_times = vec![0.0, 0.5, 0.52, 1.0];
        assert_eq!(c.sample_steps(), vec![0, 5, 10]);
        for bad in [
            SolverConfig::new(0.0, 1.0),
            SolverConfig::new(0.1, -1.0),
            SolverConfig {
                eps: 0.0,
                ..SolverConfig::new(0.1, 1.0)
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn fourth_order_in_time() {
        let grid = Grid1D::new(40.0, 256).unwrap();
        let solver = Solver::new(&models::dnls_single(), grid.clone(), true);
        let init = InitialData::gaussian(2.0).build(&grid, 1, 0.8).unwrap();
        let end = |dt: f64| {
            solver
                .run_with(&SolverConfig::new(dt, 1.0), &init, |_, _| Ok(()))
                .unwrap()
        };
        let reference = end(0.0025);
        let err = |dt: f64| {
            end(dt).values[0]
                .iter()
                .zip(&reference.values[0])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        };
        let ratio = err(0.02) / err(0.01);
        assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
    }

    #[test]
    fn mismatched_initial_data_are_refused() {
        let grid = Grid1D::new(40.0, 64).unwrap();
        let solver = Solver::new(&models::free(vec![1.0]), grid, true);
        let cfg = SolverConfig::new(0.1, 1.0);
        assert!(solver.run(&cfg, &FieldState::zeros(2, 64)).is_err());
        assert!(solver.run(&cfg, &FieldState::zeros(1, 32)).is_err());
        let mut late = FieldState::zeros(1, 64);
        late.t = 1.0;
        assert!(solver.run(&cfg, &late).is_err());
        assert!(solver.apply_j(&FieldState::zeros(1, 64), 0).is_err());
    }
}
