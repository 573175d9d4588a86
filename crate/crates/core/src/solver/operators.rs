//! The free propagator and the operators appearing in its factorization
//! `U_m = M_m D F_m M_m`: scaled Fourier transform, chirp modulation,
//! dilation, and the vector field `J_m = x + i(t/m)∂ₓ`.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::{Grid1D, Spectral};

/// Fraction of the box at each end treated as the boundary band.
const BOUNDARY_BAND: usize = 32;
/// Boundary amplitude allowed relative to the interior maximum.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Fourier multiplier of `U_m(dt) = exp(i dt/(2m) ∂ₓ²)` at wavenumber `k`.
#[inline]
pub fn free_multiplier(k: f64, mass: f64, dt: f64) -> Complex64 {
    Complex64::from_polar(1.0, -k * k * dt / (2.0 * mass))
}

/// Applies `U_m(dt)` spectrally (negative `dt` inverts it).
pub fn propagate_component(
    grid: &Grid1D,
    spectral: &Spectral,
    values: &[Complex64],
    mass: f64,
    dt: f64,
) -> Vec<Complex64> {
    let mut buf = spectral.to_spectral(values);
    for (z, &k) in buf.iter_mut().zip(grid.wavenumbers()) {
        *z *= free_multiplier(k, mass, dt);
    }
    spectral.inverse(&mut buf);
    buf
}

/// `|m|^{1/2} e^{-iπ sgn(m)/4}`.
pub fn scaled_fourier_prefactor(mass: f64) -> Complex64 {
    Complex64::from_polar(mass.abs().sqrt(), -FRAC_PI_4 * mass.signum())
}

/// `(F_m φ)(ξ) = |m|^{1/2} e^{-iπ sgn(m)/4} φ̂(mξ)` where `φ̂` is the
/// semidiscrete transform `(2π)^{-1/2} Σ e^{-i y mξ} φ(y) Δy`, summed
/// directly at arbitrary frequencies.
pub fn scaled_fourier(grid: &Grid1D, phi: &[Complex64], mass: f64, xi: &[f64]) -> Vec<Complex64> {
    let pre = scaled_fourier_prefactor(mass) * (grid.dx() / (2.0 * PI).sqrt());
    let x = grid.nodes();
    xi.par_iter()
        .map(|&s| {
            let freq = mass * s;
            let sum: Complex64 = x
                .iter()
                .zip(phi)
                .map(|(&y, &p)| {
                    let (sn, cs) = (y * freq).sin_cos();
                    p * Complex64::new(cs, -sn)
                })
                .sum();
            pre * sum
        })
        .collect()
}

/// `(M_m(t) φ)(x) = e^{imx²/(2t)} φ(x)` as a pointwise factor.
#[inline]
pub fn chirp(mass: f64, t: f64, x: f64) -> Complex64 {
    Complex64::from_polar(1.0, mass * x * x / (2.0 * t))
}

/// True when the field is negligible near both ends of the box.
pub fn boundary_supported(values: &[Complex64]) -> bool {
    let n = values.len();
    let band = (n / BOUNDARY_BAND).max(1);
    let max = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return true;
    }
    let edge = values[..band]
        .iter()
        .chain(&values[n - band..])
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    edge < BOUNDARY_TOL * max
}

/// Result of applying `J_m`, with a flag raised when the input was not
/// negligible near the box boundary (where the periodic chirp is invalid).
#[derive(Debug, Clone)]
pub struct JField {
    pub values: Vec<Complex64>,
    pub boundary_warning: bool,
}

/// `J_m φ = (it/m) e^{imx²/(2t)} ∂ₓ(e^{-imx²/(2t)} φ)` with spectral
/// differentiation of the modulated field.
pub fn apply_j_operator(
    grid: &Grid1D,
    spectral: &Spectral,
    values: &[Complex64],
    t: f64,
    mass: f64,
) -> JField {
    let x = grid.nodes();
    let modulated: Vec<Complex64> = x
        .iter()
        .zip(values)
        .map(|(&xv, &v)| chirp(mass, t, xv).conj() * v)
        .collect();
    let d = spectral.derivative(grid, &modulated);
    let factor = Complex64::new(0.0, t / mass);
    let out = x
        .iter()
        .zip(d)
        .map(|(&xv, dv)| factor * chirp(mass, t, xv) * dv)
        .collect();
    JField {
        values: out,
        boundary_warning: !boundary_supported(values),
    }
}

/// `M_m D F_m U_m(t)^{-1} φ` on the grid nodes: the leading stationary-phase
/// approximation `t^{-1/2} e^{imx²/(2t)} α(x/t)`.
pub fn stationary_phase_approximation(
    grid: &Grid1D,
    spectral: &Spectral,
    values: &[Complex64],
    t: f64,
    mass: f64,
) -> Vec<Complex64> {
    let pulled = propagate_component(grid, spectral, values, mass, -t);
    let xi: Vec<f64> = grid.nodes().iter().map(|x| x / t).collect();
    let alpha = scaled_fourier(grid, &pulled, mass, &xi);
    // the grid transform is periodic in frequency; outside the resolved
    // band it only repeats aliases
    let k_max = grid.k_max();
    grid.nodes()
        .iter()
        .zip(alpha)
        .map(|(&x, a)| {
            if (mass * x / t).abs() > k_max {
                Complex64::new(0.0, 0.0)
            } else {
                chirp(mass, t, x) * a / t.sqrt()
            }
        })
        .collect()
}
