use num_complex::Complex64;
use rayon::prelude::*;

use super::profile::ProfileState;
use crate::error::{Error, Result};
use crate::nonlinearity::CubicSystem;
use crate::structure::HermitianForm;

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// `dα/ds = -i p(ξ; α)` with `s = log t`.
fn rhs(sys: &CubicSystem, xi: f64, a: &[Complex64]) -> Vec<Complex64> {
    sys.symbol_p(xi, a)
        .expect("dimension checked")
        .into_iter()
        .map(|p| MINUS_I * p)
        .collect()
}

fn axpy(a: &[Complex64], h: f64, k: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(k).map(|(x, y)| x + y * h).collect()
}

fn rk4_step(sys: &CubicSystem, xi: f64, a: &[Complex64], h: f64) -> Vec<Complex64> {
    let k1 = rhs(sys, xi, a);
    let k2 = rhs(sys, xi, &axpy(a, 0.5 * h, &k1));
    let k3 = rhs(sys, xi, &axpy(a, 0.5 * h, &k2));
    let k4 = rhs(sys, xi, &axpy(a, h, &k3));
    a.iter()
        .enumerate()
        .map(|(j, x)| x + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0))
        .collect()
}

fn check_inputs(sys: &CubicSystem, start: &ProfileState, t_end: f64, steps: usize) -> Result<()> {
    if start.t < 1.0 {
        return Err(Error::Precondition(format!(
            "reduced flow starts at t0 >= 1, got {}",
            start.t
        )));
    }
    if !(t_end.is_finite() && t_end >= start.t) {
        return Err(Error::Precondition(format!(
            "t_end = {t_end} must be at least t0 = {}",
            start.t
        )));
    }
    if steps == 0 {
        return Err(Error::Precondition("need at least one step".into()));
    }
    if start.components() != sys.n() {
        return Err(Error::Dimension {
            expected: sys.n(),
            got: start.components(),
        });
    }
    Ok(())
}

/// The reduced flow `i dα/dt = p(ξ;α)/t`, integrated independently at every
/// `ξ` by RK4 with `steps` uniform steps in `log t`. Returns the profile at
/// every step, starting with `start` itself.
pub fn reduced_history(
    sys: &CubicSystem,
    start: &ProfileState,
    t_end: f64,
    steps: usize,
) -> Result<Vec<ProfileState>> {
    check_inputs(sys, start, t_end, steps)?;
    let s0 = start.t.ln();
    let h = (t_end.ln() - s0) / steps as f64;
    // per-ξ trajectories, then transposed into per-step profiles
    let per_xi: Vec<Vec<Vec<Complex64>>> = (0..start.xi.len())
        .into_par_iter()
        .map(|i| {
            let xi = start.xi[i];
            let mut a = start.at(i);
            let mut out = Vec::with_capacity(steps + 1);
            out.push(a.clone());
            for _ in 0..steps {
                a = rk4_step(sys, xi, &a, h);
                out.push(a.clone());
            }
            out
        })
        .collect();
    let n = sys.n();
    (0..=steps)
        .map(|step| {
            let t = if step == steps {
                t_end
            } else {
                (s0 + h * step as f64).exp()
            };
            let alpha = (0..n)
                .map(|j| per_xi.iter().map(|traj| traj[step][j]).collect())
                .collect();
            ProfileState::new(t, start.xi.clone(), alpha)
        })
        .collect()
}

/// Final state of [`reduced_history`].
pub fn integrate_reduced(
    sys: &CubicSystem,
    start: &ProfileState,
    t_end: f64,
    steps: usize,
) -> Result<ProfileState> {
    check_inputs(sys, start, t_end, steps)?;
    let s0 = start.t.ln();
    let h = (t_end.ln() - s0) / steps as f64;
    let cols: Vec<Vec<Complex64>> = (0..start.xi.len())
        .into_par_iter()
        .map(|i| {
            let xi = start.xi[i];
            let mut a = start.at(i);
            for _ in 0..steps {
                a = rk4_step(sys, xi, &a, h);
            }
            a
        })
        .collect();
    let alpha = (0..sys.n())
        .map(|j| cols.iter().map(|c| c[j]).collect())
        .collect();
    ProfileState::new(t_end, start.xi.clone(), alpha)
}

/// `ν(ξ) = √⟨α(ξ), Aα(ξ)⟩` at every grid point.
pub fn lyapunov_nu(profile: &ProfileState, a: &HermitianForm) -> Result<Vec<f64>> {
    if a.dim() != profile.components() {
        return Err(Error::Dimension {
            expected: profile.components(),
            got: a.dim(),
        });
    }
    (0..profile.xi.len())
        .map(|i| {
            let alpha = profile.at(i);
            let q = a.quadratic(&alpha)?.max(0.0);
            let nu = q.sqrt();
            let r = crate::nonlinearity::norm2(&alpha);
            debug_assert!(nu <= a.kappa_max().sqrt() * r * (1.0 + 1e-12) + 1e-300);
            debug_assert!(nu >= a.kappa_min().sqrt() * r * (1.0 - 1e-12));
            Ok(nu)
        })
        .collect()
}
