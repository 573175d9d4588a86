//! Built-in systems used throughout tests and the CLI model library.

use num_complex::Complex64;

use crate::nonlinearity::{CubicSystem, Factor, MassVector, Monomial};

fn v(k: usize) -> Factor {
    Factor::value(k)
}

fn d(k: usize) -> Factor {
    Factor::derivative(k)
}

fn build(name: &str, masses: Vec<f64>, monomials: Vec<Monomial>) -> CubicSystem {
    CubicSystem::new(
        MassVector::new(masses).expect("built-in masses are valid"),
        monomials,
    )
    .expect("built-in monomials are valid")
    .canonical()
    .with_name(name)
}

/// `i∂ₜu + ½∂ₓ²u = λ|u|²u`.
pub fn nls_single(lambda: Complex64) -> CubicSystem {
    build(
        "nls_single",
        vec![1.0],
        vec![Monomial::new(0, [v(0), v(0), v(1)], lambda)],
    )
}

/// Gauge-invariant derivative NLS `G = -i|u|²u - i|∂ₓu|²u`, whose symbol is
/// `-i(1+ξ²)|Y|²Y`.
pub fn dnls_single() -> CubicSystem {
    let mi = Complex64::new(0.0, -1.0);
    build(
        "dnls_single",
        vec![1.0],
        vec![
            Monomial::new(0, [v(0), v(0), v(1)], mi),
            Monomial::new(0, [d(0), d(1), v(0)], mi),
        ],
    )
}

/// Two-component system
/// `L_{m1}u₁ = λ₁|u₁|²u₁ + ν₁ū₁²u₂`, `L_{m2}u₂ = λ₂|u₂|²u₂ + ν₂u₁³`.
pub fn nls_two(
    m1: f64,
    m2: f64,
    lambda1: Complex64,
    lambda2: Complex64,
    nu1: Complex64,
    nu2: Complex64,
) -> CubicSystem {
    build(
        "nls_two",
        vec![m1, m2],
        vec![
            Monomial::new(0, [v(0), v(0), v(2)], lambda1),
            Monomial::new(0, [v(2), v(2), v(1)], nu1),
            Monomial::new(1, [v(1), v(1), v(3)], lambda2),
            Monomial::new(1, [v(0), v(0), v(0)], nu2),
        ],
    )
}

/// Two-component derivative system with masses `(m, 3m)`.
///
/// The last term of the second equation is `-i∂ₓ(u₁³) = -3iu₁²∂ₓu₁`, which
/// gives the symbol contribution `3mξY₁³`.
pub fn example2(m: f64, lambda1: Complex64, lambda2: Complex64, lambda3: Complex64) -> CubicSystem {
    let i = Complex64::new(0.0, 1.0);
    build(
        "example2",
        vec![m, 3.0 * m],
        vec![
            Monomial::new(0, [v(0), v(0), v(2)], lambda1),
            Monomial::new(0, [v(2), d(0), d(0)], lambda2),
            // i u₂ ∂ₓ(ū₁²) = 2i u₂ ū₁ ∂ₓū₁
            Monomial::new(0, [v(1), v(2), d(2)], 2.0 * i),
            Monomial::new(1, [v(1), v(3), d(1)], lambda3),
            Monomial::new(1, [v(1), v(1), v(3)], -i),
            Monomial::new(1, [d(1), d(3), v(1)], -i),
            Monomial::new(1, [v(0), v(0), d(0)], -3.0 * i),
        ],
    )
}

/// Three-component null-structure system with masses `(m, m, 3m)`.
pub fn example3(m: f64) -> CubicSystem {
    let one = Complex64::new(1.0, 0.0);
    build(
        "example3",
        vec![m, m, 3.0 * m],
        vec![
            // u₂ ∂ₓ(ū₁u₂)
            Monomial::new(0, [v(1), d(3), v(1)], one),
            Monomial::new(0, [v(1), v(3), d(1)], one),
            // ū₁ū₂∂ₓu₃ + 3ū₁u₃∂ₓū₂
            Monomial::new(1, [v(3), v(4), d(2)], one),
            Monomial::new(1, [v(3), v(2), d(4)], 3.0 * one),
            // 2u₁²∂ₓu₂ − u₂∂ₓ(u₁²)
            Monomial::new(2, [v(0), v(0), d(1)], 2.0 * one),
            Monomial::new(2, [v(1), v(0), d(0)], -2.0 * one),
        ],
    )
}

/// The free equation with `N` components.
pub fn free(masses: Vec<f64>) -> CubicSystem {
    build("free", masses, Vec::new())
}
