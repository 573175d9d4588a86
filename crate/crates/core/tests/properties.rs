//! Randomized invariants of the symbol, the condition checks and the solver.

use dnls_core::models;
use dnls_core::nonlinearity::{inner, norm2};
use dnls_core::solver::{Grid1D, InitialData, Solver, SolverConfig};
use dnls_core::structure::{check_dissipativity, normalized_form, DissipLevel};
use dnls_core::{CubicSystem, Factor, HermitianForm, MassVector, Monomial, SamplePlan};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn vector(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(), n)
}

/// Random two-component systems that respect resonance for masses (1, 3).
fn resonant_system() -> impl Strategy<Value = CubicSystem> {
    // (target, factors) with m_target = Σ m̃_k for masses (1, 3)
    let shapes: Vec<(usize, [usize; 3])> = vec![
        (0, [0, 0, 2]),
        (0, [2, 2, 1]),
        (0, [0, 1, 3]),
        (1, [1, 1, 3]),
        (1, [0, 0, 0]),
        (1, [0, 2, 1]),
    ];
    prop::collection::vec((complex(), prop::array::uniform3(any::<bool>())), shapes.len()).prop_map(
        move |coeffs| {
            let monomials = shapes
                .iter()
                .zip(coeffs)
                .map(|(&(j, ks), (c, d))| {
                    let f = |i: usize| {
                        if d[i] {
                            Factor::derivative(ks[i])
                        } else {
                            Factor::value(ks[i])
                        }
                    };
                    Monomial::new(j, [f(0), f(1), f(2)], c)
                })
                .collect();
            CubicSystem::new(MassVector::new(vec![1.0, 3.0]).unwrap(), monomials).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_is_idempotent_and_symbol_preserving(
        sys in resonant_system(), xi in -5.0..5.0f64, y in vector(2)
    ) {
        let c = sys.canonical();
        prop_assert!(c.is_canonical());
        prop_assert_eq!(c.canonical(), c.clone());
        let (p, q) = (sys.symbol_p(xi, &y).unwrap(), c.symbol_p(xi, &y).unwrap());
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn symbol_is_cubic_and_gauge_covariant(
        sys in resonant_system(), xi in -5.0..5.0f64, y in vector(2), r in 0.1..3.0f64, th in 0.0..6.28f64
    ) {
        // Resonant terms transform like e^{i m_j θ} under Y_k → e^{i m_k θ} Y_k
        let p = sys.symbol_p(xi, &y).unwrap();
        let masses = [1.0, 3.0];
        let rotated: Vec<Complex64> = y.iter().zip(masses)
            .map(|(z, m)| z * Complex64::from_polar(r, m * th)).collect();
        let q = sys.symbol_p(xi, &rotated).unwrap();
        for j in 0..2 {
            let expect = p[j] * Complex64::from_polar(r.powi(3), masses[j] * th);
            prop_assert!((q[j] - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn quartic_form_agrees_with_inner_product(
        sys in resonant_system(), xi in -5.0..5.0f64, y in vector(2), a1 in 0.1..5.0f64, a2 in 0.1..5.0f64
    ) {
        let a = HermitianForm::diagonal(&[a1, a2]).unwrap();
        let q = sys.quartic_form(&a, xi, &y).unwrap();
        let p = sys.symbol_p(xi, &y).unwrap();
        let direct = inner(&p, &a.apply(&y).unwrap());
        prop_assert!((q - direct).norm() <= 1e-12 * (1.0 + q.norm()));
        // normalized_form is invariant under Y → cY
        if norm2(&y) > 1e-3 {
            let g = normalized_form(&sys, &a, DissipLevel::B0, xi, &y).unwrap();
            let scaled: Vec<Complex64> = y.iter().map(|z| z * 2.5).collect();
            let h = normalized_form(&sys, &a, DissipLevel::B0, xi, &scaled).unwrap();
            prop_assert!((g - h).abs() <= 1e-9 * (1.0 + g.abs()));
        }
    }

    #[test]
    fn verdict_is_invariant_under_scaling_a(c in 0.01..100.0f64, seed in 0u64..1000) {
        let sys = models::nls_two(
            1.0, 3.0,
            Complex64::new(0.3, -0.5), Complex64::new(0.2, -0.8),
            Complex64::new(1.0, 2.0), Complex64::new(2.0, -4.0),
        );
        let plan = SamplePlan::new(41, 200, seed).unwrap();
        let a = HermitianForm::diagonal(&[2.0, 1.0]).unwrap();
        let r = check_dissipativity(&sys, &a, &plan, DissipLevel::B1).unwrap();
        let s = check_dissipativity(&sys, &a.scaled(c).unwrap(), &plan, DissipLevel::B1).unwrap();
        prop_assert_eq!(r.verdict, s.verdict);
    }

    #[test]
    fn global_phase_commutes_with_the_flow(th in 0.0..6.28f64, eps in 0.05..0.5f64) {
        let grid = Grid1D::new(40.0, 128).unwrap();
        let solver = Solver::new(&models::dnls_single(), grid.clone(), true);
        let init = InitialData::gaussian(2.0).build(&grid, 1, eps).unwrap();
        let phase = Complex64::from_polar(1.0, th);
        let rotated = InitialData::from_values(
            vec![init.values[0].iter().map(|z| z * phase).collect()], 1.0).unwrap();
        let cfg = SolverConfig::new(0.02, 0.5);
        let a = solver.run_with(&cfg, &init, |_, _| Ok(())).unwrap();
        let b = solver.run_with(&cfg, &rotated, |_, _| Ok(())).unwrap();
        for (u, v) in a.values[0].iter().zip(&b.values[0]) {
            prop_assert!((u * phase - v).norm() < 1e-12);
        }
    }
}
