//! Spot checks that the fast log-space path and the extended-precision
//! direct-product oracle agree far below the fast path's own accuracy
//! target. The two paths share no evaluation code.

use ellbeta::oracle::{self, dd::DdC};
use ellbeta::special::{
    self, double_sine, elliptic_gamma, kappa, modified_gamma_g, GammaGPath, KappaPath,
    OmegaTriple, TruncationPolicy,
};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn qpoch_matches_oracle() {
    let pol = TruncationPolicy::default();
    for &(a, b) in &[
        (c(0.2, 0.1), c(0.4, 0.0)),
        (c(-0.8, 0.3), c(0.1, -0.4)),
        (c(2.5, -1.0), c(0.5, 0.2)),
    ] {
        let fast = special::qpoch_inf(a, b, &pol).unwrap();
        let gold = oracle::qpoch(DdC::from_c64(a), DdC::from_c64(b), oracle::DEPTH_1D).to_c64();
        assert!(rel(fast, gold) < 1e-13, "qpoch({a}, {b}): {}", rel(fast, gold));
    }
}

#[test]
fn theta_matches_oracle() {
    for &(z, p) in &[
        (c(0.5, 0.2), c(0.25, 0.0)),
        (c(1.3, -0.4), c(-0.2, 0.35)),
        (c(0.9, 0.1), c(0.0, 0.45)),
    ] {
        let fast = special::theta(z, p).unwrap();
        let gold =
            oracle::theta(DdC::from_c64(z), DdC::from_c64(p), oracle::DEPTH_1D).to_c64();
        assert!(rel(fast, gold) < 1e-13, "theta({z}; {p}): {}", rel(fast, gold));
    }
}

#[test]
fn elliptic_gamma_matches_oracle() {
    for &(z, q, p) in &[
        (c(0.4, 0.3), c(0.35, 0.0), c(0.15, 0.0)),
        (c(1.2, -0.5), c(0.3, 0.1), c(-0.1, 0.25)),
        (c(0.7, 0.0), c(0.0, 0.4), c(0.2, 0.2)),
    ] {
        let fast = elliptic_gamma(z, q, p).unwrap();
        let gold = oracle::gamma(
            DdC::from_c64(z),
            DdC::from_c64(q),
            DdC::from_c64(p),
            oracle::DEPTH_2D,
        )
        .to_c64();
        assert!(
            rel(fast, gold) < 1e-12,
            "gamma({z}; {q}, {p}): {}",
            rel(fast, gold)
        );
    }
}

#[test]
fn modified_gamma_matches_oracle_on_unit_circle_triple() {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let w = OmegaTriple::new(c(1.0, 0.0), c(phi, 0.0), c(0.0, 3.0)).unwrap();
    let wd = oracle::OmegaDd::from_c64(w.omega1, w.omega2, w.omega3);
    for &u in &[c(0.25, 0.0), c(0.4, 0.1), c(-0.3, 0.2)] {
        let fast = modified_gamma_g(u, &w, GammaGPath::Auto).unwrap();
        let gold = oracle::g_modular(DdC::from_c64(u), &wd, oracle::DEPTH_2D).to_c64();
        assert!(rel(fast, gold) < 1e-12, "G({u}): {}", rel(fast, gold));
    }
}

#[test]
fn double_sine_matches_oracle() {
    let w = OmegaTriple::new(c(1.0, 2.0), c(1.0, 0.0), c(0.0, 3.0)).unwrap();
    for &u in &[c(0.5, 0.0), c(0.3, 0.4), c(-0.6, 0.1)] {
        let fast = double_sine(u, &w).unwrap();
        let gold = oracle::double_sine(
            DdC::from_c64(u),
            DdC::from_c64(w.omega1),
            DdC::from_c64(w.omega2),
            oracle::DEPTH_1D,
        )
        .to_c64();
        assert!(rel(fast, gold) < 1e-13, "S({u}): {}", rel(fast, gold));
    }
}

#[test]
fn kappa_matches_oracle_both_paths() {
    let w = OmegaTriple::new(c(1.0, 0.5), c(2.0, 0.0), c(0.0, 3.0)).unwrap();
    let wd = oracle::OmegaDd::from_c64(w.omega1, w.omega2, w.omega3);
    let fast_eta = kappa(&w, KappaPath::EtaProducts).unwrap();
    let fast_omega = kappa(&w, KappaPath::OmegaForm).unwrap();
    let gold = oracle::kappa_eta(&wd, 512).to_c64();
    assert!(rel(fast_eta, gold) < 1e-13);
    assert!(rel(fast_omega, gold) < 1e-12);
}
