//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured figure of merit. Tolerances are pinned here, not
//! configurable. Tests share a mutex so timing assertions see the whole
//! machine.
//!
//! Run with:
//!   cargo test --release --test acceptance -- --test-threads=1 --nocapture

use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;

use ellbeta::fixtures::{default_fixture_path, golden_cases, load_fixture};
use ellbeta::identities::{run_battery, sample_params, FamilyKind, SampleCtx};
use ellbeta::kernels::{
    AnParams, AnSymParams, CnParams, FamilyParams, ModifiedParams, QReducedParams,
    UnivariateParams,
};
use ellbeta::quadrature::{
    eval_integral, telescope_check, GridOptions, ShiftBase,
};
use ellbeta::special::{BaseSet, OmegaTriple};

static GATE: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn std_bases() -> BaseSet {
    BaseSet::from_qp(c(0.3, 0.0), c(0.2, 0.0)).unwrap()
}

fn unit_omega() -> OmegaTriple {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    OmegaTriple::new(c(1.0, 0.0), c(phi, 0.0), c(0.0, 3.0)).unwrap()
}

fn line_omega() -> OmegaTriple {
    OmegaTriple::new(c(1.0, 0.2), c(1.0, 0.0), c(0.0, 8.0)).unwrap()
}

fn grid(rel_tol: f64, n: usize) -> GridOptions {
    GridOptions {
        rel_tol,
        ..GridOptions::defaults_for(n)
    }
}

const SEED: u64 = 20240317;

#[test]
fn ac01_special_function_identity_suite() {
    let _g = serial();
    let started = Instant::now();
    let ids: Vec<String> = [
        "theta_quasiperiod",
        "gamma_shift_q",
        "gamma_shift_p",
        "gamma_reflection",
        "gamma_base_symmetry",
        "g_shift_omega1",
        "g_shift_omega2",
        "g_shift_omega3",
        "g_product_modular",
        "g_reflection",
        "p_antisymmetry",
        "s_reflection",
        "s_asymp_upper",
        "s_asymp_lower",
        "kappa_two_path",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let reports = run_battery(&ids, 100, SEED, None).unwrap();
    let elapsed = started.elapsed();
    let mut worst: f64 = 0.0;
    for rep in &reports {
        assert!(
            rep.max_residual < 1e-10,
            "{}: max residual {:.3e} >= 1e-10 (worst point {})",
            rep.identity_id,
            rep.max_residual,
            rep.worst_point
        );
        worst = worst.max(rep.max_residual);
    }
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "suite took {elapsed:.1?}, budget 10 s"
    );
    println!(
        "AC1 special-function identity suite: PASS \
         ({} identities x 100 points, worst residual {worst:.2e}, {elapsed:.1?})",
        reports.len()
    );
}

#[test]
fn ac02_certificate_identities() {
    let _g = serial();
    let started = Instant::now();
    let ids: Vec<String> = [
        "eqn_univariate",
        "eqn_exp_univariate",
        "eqn_cn_n2",
        "eqn_exp_cn_n2",
        "eqn_an_n2",
        "eqn_exp_an_n2",
        "eqn_cn_q_n2",
        "eqn_an_q_n2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let reports = run_battery(&ids, 200, SEED, None).unwrap();
    let mut worst: f64 = 0.0;
    for rep in &reports {
        assert!(
            rep.max_residual < 1e-9,
            "{}: max residual {:.3e} >= 1e-9",
            rep.identity_id,
            rep.max_residual
        );
        worst = worst.max(rep.max_residual);
    }
    // Exact points z = t_1 / z_1 = t_1.
    let exact_ids: Vec<String> = [
        "eqn_exp_exact_univariate",
        "eqn_exp_exact_cn_n2",
        "eqn_exp_exact_an_n2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let exact = run_battery(&exact_ids, 50, SEED, None).unwrap();
    for rep in &exact {
        assert!(
            rep.max_residual < 1e-12,
            "{}: exact-point residual {:.3e} >= 1e-12",
            rep.identity_id,
            rep.max_residual
        );
    }
    println!(
        "AC2 certificate identities: PASS \
         (8 equations x 200 points, worst residual {worst:.2e}; \
         exact points < 1e-12; {:.1?})",
        started.elapsed()
    );
}

#[test]
fn ac03_theta_identities_n2_n3() {
    let _g = serial();
    let started = Instant::now();
    let ids: Vec<String> = [
        "afunction_n2",
        "afunction_n3",
        "zn1tj_n2",
        "zn1tj_n3",
        "z1zn1_n2",
        "z1zn1_n3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let reports = run_battery(&ids, 100, SEED, None).unwrap();
    let mut worst: f64 = 0.0;
    for rep in &reports {
        assert!(
            rep.max_residual < 1e-10,
            "{}: max residual {:.3e} >= 1e-10",
            rep.identity_id,
            rep.max_residual
        );
        worst = worst.max(rep.max_residual);
    }
    println!(
        "AC3 theta identities at n=2,3: PASS (worst residual {worst:.2e}, {:.1?})",
        started.elapsed()
    );
}

#[test]
fn ac04_univariate_integral_reproduction() {
    let _g = serial();
    let b = std_bases();
    // The closed form pinned by the oracle fixture.
    let fixture = load_fixture(&default_fixture_path()).unwrap();
    let pinned = fixture
        .records
        .iter()
        .find(|r| r.name == "univariate_rhs_q03_p02")
        .expect("pinned rhs record")
        .value();
    let mut worst: f64 = 0.0;
    let mut slowest = 0.0f64;
    for seed in 1..=5u64 {
        let fam = sample_params(FamilyKind::Univariate, SampleCtx::Bases(&b), seed).unwrap();
        let started = Instant::now();
        let chk = eval_integral(&fam, Some(&b), &grid(1e-9, 1)).unwrap();
        let dt = started.elapsed().as_secs_f64();
        slowest = slowest.max(dt);
        assert!(chk.lhs.converged, "seed {seed} unconverged");
        assert!(
            chk.lhs.points_per_dim <= 1024,
            "seed {seed}: {} grid points",
            chk.lhs.points_per_dim
        );
        assert!(
            chk.rel_err < 1e-8,
            "seed {seed}: rel err {:.3e} >= 1e-8",
            chk.rel_err
        );
        assert!(dt < 1.0, "seed {seed}: {dt:.2} s >= 1 s");
        let vs_pinned = (chk.rhs - pinned).norm() / pinned.norm();
        assert!(vs_pinned < 1e-13, "closed form drifted from the pinned value");
        worst = worst.max(chk.rel_err);
    }
    println!(
        "AC4 univariate integral: PASS (5 draws, worst rel err {worst:.2e}, \
         slowest {slowest:.2} s, <= 1024 points)"
    );
}

#[test]
fn ac05_cn_an_ansym_dn_integrals() {
    let _g = serial();
    let b = std_bases();
    // n = 1 cases: under a second, 1e-8.
    for kind in [FamilyKind::Cn { n: 1 }, FamilyKind::An { n: 1 }] {
        let fam = sample_params(kind, SampleCtx::Bases(&b), 2).unwrap();
        let started = Instant::now();
        let chk = eval_integral(&fam, Some(&b), &grid(1e-9, 1)).unwrap();
        let dt = started.elapsed().as_secs_f64();
        assert!(chk.lhs.converged && chk.rel_err < 1e-8,
            "{}: rel err {:.3e}", chk.family, chk.rel_err);
        assert!(dt < 1.0, "{}: {dt:.2} s >= 1 s", chk.family);
        println!(
            "AC5 {} integral: PASS (rel err {:.2e}, {dt:.2} s)",
            chk.family, chk.rel_err
        );
    }
    // n = 2 cases: under a minute, 1e-6.
    for kind in [FamilyKind::Cn { n: 2 }, FamilyKind::An { n: 2 }] {
        let fam = sample_params(kind, SampleCtx::Bases(&b), 2).unwrap();
        let started = Instant::now();
        let chk = eval_integral(&fam, Some(&b), &grid(1e-7, 2)).unwrap();
        let dt = started.elapsed().as_secs_f64();
        assert!(chk.lhs.converged && chk.rel_err < 1e-6,
            "{}: rel err {:.3e}", chk.family, chk.rel_err);
        assert!(dt < 60.0, "{}: {dt:.1} s >= 60 s", chk.family);
        println!(
            "AC5 {} integral: PASS (rel err {:.2e}, {dt:.1} s)",
            chk.family, chk.rel_err
        );
    }
    // Symmetric A_n with the balancing AS = pq at n = 1: 1e-7.
    let fam = sample_params(FamilyKind::AnSym { n: 1 }, SampleCtx::Bases(&b), 4).unwrap();
    if let FamilyParams::AnSym(par) = &fam {
        let bal = (par.a() * par.s_prod() - b.p * b.q).norm();
        assert!(bal <= 1e-12 * (b.p * b.q).norm(), "balancing violated");
    }
    let chk = eval_integral(&fam, Some(&b), &grid(1e-8, 1)).unwrap();
    assert!(chk.lhs.converged && chk.rel_err < 1e-7,
        "an_sym: rel err {:.3e}", chk.rel_err);
    println!("AC5 an_sym_n1 integral: PASS (rel err {:.2e})", chk.rel_err);
    // D_n type at n = 1: 1e-7.
    let fam = sample_params(FamilyKind::Dn { n: 1 }, SampleCtx::Bases(&b), 4).unwrap();
    let chk = eval_integral(&fam, None, &grid(1e-8, 1)).unwrap();
    assert!(chk.lhs.converged && chk.rel_err < 1e-7,
        "dn: rel err {:.3e}", chk.rel_err);
    println!("AC5 dn_n1 integral: PASS (rel err {:.2e})", chk.rel_err);
}

#[test]
fn ac06_modified_integrals_on_unit_circle() {
    let _g = serial();
    let w = unit_omega();
    assert!((w.bases().q.norm() - 1.0).abs() <= 1e-14, "|q| must be 1");
    for (kind, label) in [
        (FamilyKind::CnUnit { n: 1 }, "cn_unit"),
        (FamilyKind::AnUnit { n: 1 }, "an_unit"),
        (FamilyKind::DnUnit { n: 1 }, "dn_unit"),
    ] {
        let fam = sample_params(kind, SampleCtx::Omega(&w), 6).unwrap();
        let chk = eval_integral(&fam, None, &grid(1e-8, 1)).unwrap();
        assert!(chk.lhs.converged, "{label} unconverged");
        assert!(
            chk.rel_err < 1e-6,
            "{label}: rel err {:.3e} >= 1e-6 vs kappa closed form",
            chk.rel_err
        );
        let agree = chk.alt_agreement.unwrap();
        assert!(
            agree < 1e-7,
            "{label}: segment vs torus paths disagree at {agree:.3e}"
        );
        println!(
            "AC6 {label} integral: PASS (rel err {:.2e} vs kappa form, \
             path agreement {agree:.2e})",
            chk.rel_err
        );
    }
}

#[test]
fn ac07_qreduced_integrals() {
    let _g = serial();
    let w = line_omega();
    for (kind, label) in [
        (FamilyKind::CnQ { n: 1 }, "cn_q"),
        (FamilyKind::AnQ { n: 1 }, "an_q"),
        (FamilyKind::DnQ { n: 1 }, "dn_q"),
    ] {
        let fam = sample_params(kind, SampleCtx::Omega(&w), 8).unwrap();
        let started = Instant::now();
        let chk = eval_integral(&fam, None, &grid(1e-8, 1)).unwrap();
        let dt = started.elapsed().as_secs_f64();
        assert!(chk.lhs.converged, "{label} unconverged");
        assert!(
            chk.rel_err < 1e-6,
            "{label}: rel err {:.3e} >= 1e-6",
            chk.rel_err
        );
        assert!(dt < 5.0, "{label}: {dt:.1} s >= 5 s");
        println!(
            "AC7 {label} integral: PASS (rel err {:.2e}, {dt:.1} s, boundary guard ok)",
            chk.rel_err
        );
    }
    // C_n at n = 2: 1e-5 within two minutes; the boundary-decay guard runs
    // on every window.
    let fam = sample_params(FamilyKind::CnQ { n: 2 }, SampleCtx::Omega(&w), 8).unwrap();
    let started = Instant::now();
    let chk = eval_integral(&fam, None, &grid(1e-6, 2)).unwrap();
    let dt = started.elapsed().as_secs_f64();
    assert!(chk.lhs.converged && chk.rel_err < 1e-5,
        "cn_q n=2: rel err {:.3e}", chk.rel_err);
    assert!(dt < 120.0, "cn_q n=2: {dt:.1} s >= 120 s");
    println!(
        "AC7 cn_q_n2 integral: PASS (rel err {:.2e}, {dt:.1} s, boundary guard ok)",
        chk.rel_err
    );
}

#[test]
fn ac08_telescoping_and_t1_sweep() {
    let _g = serial();
    let b = std_bases();
    // Univariate.
    let fam = sample_params(FamilyKind::Univariate, SampleCtx::Bases(&b), 3).unwrap();
    let rep = telescope_check(&fam, &b, &grid(1e-9, 1), ShiftBase::Q).unwrap();
    assert!(rep.annulus_ok, "annulus: {:?}", rep.annulus_violations);
    assert!(rep.residual < 1e-7, "univariate residual {:.3e}", rep.residual);
    println!(
        "AC8 telescoping univariate: PASS (|I(q t1)/I - 1| = {:.2e})",
        rep.residual
    );
    // C_n at n = 2: explicit parameters with |p| < |A| for the annulus.
    let bb = BaseSet::from_qp(c(0.3, 0.0), c(0.15, 0.0)).unwrap();
    let t: Vec<Complex64> = [0.82, 0.81, 0.83, 0.80, 0.82, 0.84, 0.81]
        .iter()
        .enumerate()
        .map(|(k, &m)| Complex64::from_polar(m, 0.83 * k as f64 + 0.31))
        .collect();
    let fam = FamilyParams::Cn(CnParams::new(2, t).unwrap());
    let rep = telescope_check(&fam, &bb, &grid(1e-8, 2), ShiftBase::Q).unwrap();
    assert!(rep.annulus_ok, "annulus: {:?}", rep.annulus_violations);
    assert!(rep.residual < 1e-7, "cn n=2 residual {:.3e}", rep.residual);
    println!("AC8 telescoping cn_n2: PASS (residual {:.2e})", rep.residual);
    // A_n at n = 2: the annulus needs |t_m| < |q| for m >= 2 and |p| < |TS|.
    let bq = BaseSet::from_qp(c(0.5, 0.0), c(0.03, 0.0)).unwrap();
    let t = vec![
        Complex64::from_polar(0.70, 0.4),
        Complex64::from_polar(0.42, 1.6),
        Complex64::from_polar(0.45, 2.9),
    ];
    let s: Vec<Complex64> = [0.80, 0.82, 0.78, 0.81]
        .iter()
        .enumerate()
        .map(|(k, &m)| Complex64::from_polar(m, 0.67 * k as f64 + 0.93))
        .collect();
    let fam = FamilyParams::An(AnParams::new(2, t, s).unwrap());
    let rep = telescope_check(&fam, &bq, &grid(1e-8, 2), ShiftBase::Q).unwrap();
    assert!(rep.annulus_ok, "annulus: {:?}", rep.annulus_violations);
    assert!(rep.residual < 1e-7, "an n=2 residual {:.3e}", rep.residual);
    println!("AC8 telescoping an_n2: PASS (residual {:.2e})", rep.residual);
    // t1 sweep flatness over 20 admissible points.
    let fam = sample_params(FamilyKind::Univariate, SampleCtx::Bases(&b), 3).unwrap();
    let FamilyParams::Univariate(par) = &fam else { unreachable!() };
    let mut values = Vec::new();
    for k in 0..20 {
        let factor = c(0.8 + 0.35 * k as f64 / 19.0, 0.0);
        let v = FamilyParams::Univariate(par.with_t1_scaled(factor));
        let chk = eval_integral(&v, Some(&b), &grid(1e-9, 1)).unwrap();
        values.push(chk.lhs.value);
    }
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    let spread = values
        .iter()
        .map(|v| (v - mean).norm())
        .fold(0.0f64, f64::max)
        / mean.norm();
    assert!(spread < 1e-7, "t1 sweep spread {spread:.3e} >= 1e-7");
    println!("AC8 t1 sweep flatness: PASS (relative spread {spread:.2e} over 20 points)");
}

#[test]
fn ac09_oracle_equivalence() {
    let _g = serial();
    let fixture = load_fixture(&default_fixture_path()).unwrap();
    let cases = golden_cases();
    assert_eq!(fixture.records.len(), cases.len());
    let mut worst: f64 = 0.0;
    for rec in &fixture.records {
        let case = cases
            .iter()
            .find(|case| case.name == rec.name)
            .unwrap_or_else(|| panic!("no golden case for record {}", rec.name));
        let fast = (case.fast)().unwrap_or_else(|e| panic!("{}: {e}", rec.name));
        let rel = (fast - rec.value()).norm() / rec.value().norm().max(1e-300);
        assert!(
            rel < 1e-11,
            "{}: fast path differs from oracle fixture by {rel:.3e}",
            rec.name
        );
        worst = worst.max(rel);
    }
    println!(
        "AC9 oracle equivalence: PASS ({} fixture records, worst rel diff {worst:.2e})",
        fixture.records.len()
    );
}

#[test]
fn ac10_determinism_across_worker_counts() {
    let _g = serial();
    let ids: Vec<String> = ["eqn_univariate", "gamma_reflection", "afunction_n2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let b = std_bases();
    let run_all = |threads: usize| -> (String, u64, u64) {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let reports = run_battery(&ids, 25, SEED, None).unwrap();
            let battery = serde_json::to_string(&reports).unwrap();
            let fam =
                sample_params(FamilyKind::Univariate, SampleCtx::Bases(&b), 3).unwrap();
            let chk = eval_integral(&fam, Some(&b), &grid(1e-9, 1)).unwrap();
            (battery, chk.lhs.value.re.to_bits(), chk.lhs.value.im.to_bits())
        })
    };
    let (r1, re1, im1) = run_all(1);
    let (r2, re2, im2) = run_all(2);
    let (r8, re8, im8) = run_all(8);
    assert_eq!(r1, r2, "battery reports differ between 1 and 2 workers");
    assert_eq!(r1, r8, "battery reports differ between 1 and 8 workers");
    assert_eq!((re1, im1), (re2, im2), "integral bits differ at 2 workers");
    assert_eq!((re1, im1), (re8, im8), "integral bits differ at 8 workers");
    println!(
        "AC10 determinism: PASS (battery reports byte-identical and \
         integral values bit-identical across 1, 2, 8 workers)"
    );
}
