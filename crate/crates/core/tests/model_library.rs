//! The shipped model files against the built-in constructors.

use std::path::PathBuf;

use dnls_core::models;
use dnls_core::structure::{
    check_b3_exact, check_condition_a, check_dissipativity, check_gauge_invariance, DissipLevel, Verdict,
};
use dnls_core::{CubicSystem, HermitianForm, SamplePlan};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn load(name: &str) -> CubicSystem {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name);
    CubicSystem::from_toml_str(&std::fs::read_to_string(&p).unwrap()).unwrap()
}

fn same_system(file: &CubicSystem, built: &CubicSystem) {
    assert_eq!(file.name, built.name);
    assert_eq!(file.masses(), built.masses());
    let (a, b) = (file.symbol_expansion(), built.symbol_expansion());
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    for k in keys {
        let zero = Complex64::new(0.0, 0.0);
        let (x, y) = (a.get(k).unwrap_or(&zero), b.get(k).unwrap_or(&zero));
        assert!((x - y).norm() < 1e-14, "{}: term {k:?} {x} vs {y}", file.name);
    }
}

#[test]
fn files_match_constructors() {
    same_system(&load("nls_single.toml"), &models::nls_single(c(0.0, -1.0)));
    same_system(&load("dnls_single.toml"), &models::dnls_single());
    same_system(
        &load("nls_two.toml"),
        &models::nls_two(1.0, 3.0, c(0.3, -0.5), c(0.2, -0.8), c(1.0, 2.0), c(2.0, -4.0)),
    );
    same_system(
        &load("example2.toml"),
        &models::example2(1.0, c(0.0, -0.5), c(0.3, 0.4), c(1.0, 0.5)),
    );
    same_system(&load("example3.toml"), &models::example3(1.0));
}

#[test]
fn toml_round_trip_is_exact() {
    for name in [
        "nls_single.toml",
        "dnls_single.toml",
        "nls_two.toml",
        "example2.toml",
        "example3.toml",
        "nls_amplifying.toml",
    ] {
        let sys = load(name);
        let again = CubicSystem::from_toml_str(&sys.to_toml_string()).unwrap();
        assert_eq!(again, sys, "{name}");
    }
}

#[test]
fn library_conditions() {
    let plan = SamplePlan::with_seed(3);
    for name in [
        "nls_single.toml",
        "dnls_single.toml",
        "nls_two.toml",
        "example2.toml",
        "example3.toml",
    ] {
        assert!(check_condition_a(&load(name)).holds(), "{name}");
    }
    for name in ["nls_single.toml", "dnls_single.toml", "nls_amplifying.toml"] {
        assert!(check_gauge_invariance(&load(name)).unwrap().holds(), "{name}");
    }
    let id = HermitianForm::identity(1);
    let nls = load("nls_single.toml");
    assert!(check_dissipativity(&nls, &id, &plan, DissipLevel::B1)
        .unwrap()
        .holds());
    assert_eq!(
        check_dissipativity(&nls, &id, &plan, DissipLevel::B2)
            .unwrap()
            .verdict,
        Verdict::Violated
    );
    let dnls = load("dnls_single.toml");
    assert!(check_dissipativity(&dnls, &id, &plan, DissipLevel::B2)
        .unwrap()
        .holds());
    let amp = load("nls_amplifying.toml");
    assert_eq!(
        check_dissipativity(&amp, &id, &plan, DissipLevel::B0)
            .unwrap()
            .verdict,
        Verdict::Violated
    );
    let ex2 = load("example2.toml");
    let a = HermitianForm::diagonal(&[3.0, 2.0]).unwrap();
    assert!(check_dissipativity(&ex2, &a, &plan, DissipLevel::B2)
        .unwrap()
        .holds());
    let nls_two = load("nls_two.toml");
    let k = HermitianForm::diagonal(&[2.0, 1.0]).unwrap();
    assert!(check_dissipativity(&nls_two, &k, &plan, DissipLevel::B1)
        .unwrap()
        .holds());
    assert_eq!(
        check_b3_exact(&load("example3.toml")).verdict,
        Verdict::HoldsExactly
    );
}
