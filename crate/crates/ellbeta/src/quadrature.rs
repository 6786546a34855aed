//! Contour quadrature for the integral families: tensor-grid periodic
//! trapezoid rules on the torus and the segment [-omega3/2, omega3/2],
//! and a truncated trapezoid rule on the line i omega2 R, all with grid
//! doubling, nested sample reuse and a deterministic pairwise reduction.
//!
//! Grid-point evaluation is parallel; the reduction tree's shape depends
//! only on the grid size, so results are bit-identical for any worker
//! count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    an_param_acc, cn_param_acc, delta_dn_acc, dn_param_acc, modified_param_acc,
    modified_to_torus, qreduced_param_acc, rho_an_acc, rho_an_sym_acc, rho_cn_acc,
    rho_modified_acc, rho_qreduced_acc, rho_univariate_acc, segment_measure_factor,
    univariate_param_acc, validate_domain, FamilyParams, GammaCtx, ModifiedCtx, ModifiedFamily,
    ModifiedParams, QReducedParams, SineCtx,
};
use crate::special::{
    exp_2pi_i, kappa_auto, qpoch_inf, BaseSet, LogAcc, OmegaTriple, TruncationPolicy, TWO_PI,
};

/// Result of one quadrature run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureResult {
    #[serde(with = "crate::wire::cpx")]
    pub value: Complex64,
    /// Absolute difference between the last two grid levels.
    pub err_estimate: f64,
    pub points_per_dim: usize,
    pub converged: bool,
}

/// Grid-refinement options.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridOptions {
    pub initial_points: usize,
    pub max_points: usize,
    pub rel_tol: f64,
    /// Half-width X of the truncated line window; 0 selects the decay-bound
    /// automatic choice.
    pub line_halfwidth: f64,
}

impl GridOptions {
    /// Defaults per dimension count: 64 initial points; 4096 max for n = 1,
    /// 1024 for n = 2, 256 for n = 3.
    pub fn defaults_for(n: usize) -> Self {
        let max_points = match n {
            0 | 1 => 4096,
            2 => 1024,
            _ => 256,
        };
        GridOptions {
            initial_points: 64,
            max_points,
            rel_tol: 1e-9,
            line_halfwidth: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_points < 16 || self.initial_points % 2 != 0 {
            return Err(Error::Config(
                "initial_points must be even and at least 16".into(),
            ));
        }
        if self.max_points < self.initial_points {
            return Err(Error::Config("max_points must be >= initial_points".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Hard cap on the total number of tensor-grid nodes per level.
const MAX_TOTAL_POINTS: usize = 1 << 24;

// ---------------------------------------------------------------------------
// Deterministic reduction
// ---------------------------------------------------------------------------

/// Fixed-shape pairwise summation with a compensated (Neumaier) base case.
/// The tree depends only on the slice length.
pub fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    if v.len() <= 64 {
        let mut s = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        for &x in v {
            let t = s + x;
            let c_re = if s.re.abs() >= x.re.abs() {
                (s.re - t.re) + x.re
            } else {
                (x.re - t.re) + s.re
            };
            let c_im = if s.im.abs() >= x.im.abs() {
                (s.im - t.im) + x.im
            } else {
                (x.im - t.im) + s.im
            };
            comp += Complex64::new(c_re, c_im);
            s = t;
        }
        s + comp
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

// ---------------------------------------------------------------------------
// Tensor-grid engine
// ---------------------------------------------------------------------------

fn decode(idx: usize, n: usize, pts: usize, out: &mut [usize]) {
    let mut rem = idx;
    for d in (0..n).rev() {
        out[d] = rem % pts;
        rem /= pts;
    }
}

fn encode(coords: &[usize], pts: usize) -> usize {
    coords.iter().fold(0, |a, &c| a * pts + c)
}

/// Evaluates `f` on the tensor grid `nodes^n`, reusing `prev` (the grid of
/// half the resolution) at even multi-indices when the node tables nest.
fn eval_grid<F>(
    f: &F,
    n: usize,
    nodes: &[Complex64],
    prev: Option<&[Complex64]>,
) -> Result<Vec<Complex64>>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync + ?Sized,
{
    let pts = nodes.len();
    let total = pts
        .checked_pow(n as u32)
        .filter(|&t| t <= MAX_TOTAL_POINTS)
        .ok_or_else(|| Error::Config("tensor grid exceeds the point budget".into()))?;
    (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut coords = [0usize; 8];
            decode(idx, n, pts, &mut coords[..n]);
            if let Some(prev) = prev {
                if coords[..n].iter().all(|&c| c % 2 == 0) {
                    let half: Vec<usize> = coords[..n].iter().map(|&c| c / 2).collect();
                    // Previous-level width: pts/2 nodes on periodic grids
                    // (even pts), pts/2 + 1 on trapezoid grids (odd pts).
                    return Ok(prev[encode(&half, (pts + 1) / 2)]);
                }
            }
            let z: Vec<Complex64> = coords[..n].iter().map(|&c| nodes[c]).collect();
            f(&z)
        })
        .collect()
}

/// Doubling loop for a periodic rule: the level value is
/// `scale(pts) * sum(values)`.
fn doubling_loop<F, S>(
    f: &F,
    n: usize,
    opt: &GridOptions,
    make_nodes: impl Fn(usize) -> Vec<Complex64>,
    scale: S,
) -> Result<QuadratureResult>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync + ?Sized,
    S: Fn(usize) -> Complex64,
{
    opt.validate()?;
    let mut pts = opt.initial_points;
    let mut prev_vals: Option<Vec<Complex64>> = None;
    let mut prev_value: Option<Complex64> = None;
    loop {
        let nodes = make_nodes(pts);
        let vals = eval_grid(f, n, &nodes, prev_vals.as_deref())?;
        let value = scale(pts) * pairwise_sum(&vals);
        if let Some(pv) = prev_value {
            let err = (value - pv).norm();
            if err <= opt.rel_tol * (1.0 + value.norm()) {
                return Ok(QuadratureResult {
                    value,
                    err_estimate: err,
                    points_per_dim: pts,
                    converged: true,
                });
            }
            if pts * 2 > opt.max_points {
                return Ok(QuadratureResult {
                    value,
                    err_estimate: err,
                    points_per_dim: pts,
                    converged: false,
                });
            }
        } else if pts * 2 > opt.max_points {
            return Ok(QuadratureResult {
                value,
                err_estimate: f64::INFINITY,
                points_per_dim: pts,
                converged: false,
            });
        }
        prev_vals = Some(vals);
        prev_value = Some(value);
        pts *= 2;
    }
}

/// Integrates f over the n-torus with the measure prod dz_j / z_j:
/// z_j = e^{i theta_j}, value = i^n (2 pi / N)^n sum f.
pub fn torus_integrate<F>(f: &F, n: usize, opt: &GridOptions) -> Result<QuadratureResult>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync + ?Sized,
{
    doubling_loop(
        f,
        n,
        opt,
        |pts| {
            (0..pts)
                .map(|k| Complex64::new(0.0, TWO_PI * k as f64 / pts as f64).exp())
                .collect()
        },
        |pts| Complex64::new(0.0, TWO_PI / pts as f64).powu(n as u32),
    )
}

/// Integrates a kernel over the segment [-omega3/2, omega3/2] per
/// coordinate with the measure prod du_j / omega2. The integrand is a
/// function of e^{-2 pi i u / omega3} and hence periodic with period
/// omega3 along the segment, so the equispaced rule applies.
pub fn segment_integrate<F>(
    f: &F,
    n: usize,
    w: &OmegaTriple,
    opt: &GridOptions,
) -> Result<QuadratureResult>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync + ?Sized,
{
    let w3 = w.omega3;
    let ratio = w.omega3 / w.omega2;
    doubling_loop(
        f,
        n,
        opt,
        |pts| {
            (0..pts)
                .map(|k| w3 * (-0.5 + k as f64 / pts as f64))
                .collect()
        },
        |pts| (ratio / pts as f64).powu(n as u32),
    )
}

/// Integrates a q-reduced kernel over the contour (i omega2 R)^n with the
/// measure prod du_j / omega2, truncated to u_j = i omega2 x_j with
/// x_j in [-X, X]. X comes from the kernel's decay bound
/// e^{-2 pi (1 + Re(omega2/omega1)) X} < rel_tol / 10 unless overridden.
/// Boundary samples are checked against the peak magnitude.
pub fn line_integrate<F>(
    f: &F,
    n: usize,
    w: &OmegaTriple,
    opt: &GridOptions,
) -> Result<QuadratureResult>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync + ?Sized,
{
    opt.validate()?;
    let decay = 1.0 + (w.omega2 / w.omega1).re;
    if decay <= 0.0 {
        return Err(Error::domain(
            "line quadrature needs 1 + Re(omega2/omega1) > 0",
        ));
    }
    let x_auto = (10.0 / opt.rel_tol).ln() / (TWO_PI * decay);
    // The decay bound fixes the exponent only; the prefactor is empirical.
    // Grow the window until the boundary guard is satisfied.
    let attempts: &[f64] = if opt.line_halfwidth > 0.0 {
        &[1.0]
    } else {
        &[1.0, 1.6, 2.56, 4.1]
    };
    let mut last_err: Option<Error> = None;
    for &widen in attempts {
        let x_max = if opt.line_halfwidth > 0.0 {
            opt.line_halfwidth
        } else {
            x_auto * widen
        };
        match line_integrate_window(f, n, w, opt, x_max) {
            Ok(res) => return Ok(res),
            Err(e @ Error::Domain(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::domain("line quadrature window selection failed")))
}

fn line_integrate_window<F>(
    f: &F,
    n: usize,
    w: &OmegaTriple,
    opt: &GridOptions,
    x_max: f64,
) -> Result<QuadratureResult>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync + ?Sized,
{
    let iw2 = Complex64::new(0.0, 1.0) * w.omega2;
    let mut pts = opt.initial_points;
    let mut prev_vals: Option<Vec<Complex64>> = None;
    let mut prev_value: Option<Complex64> = None;
    loop {
        // pts intervals, pts + 1 trapezoid nodes per dimension.
        let nodes: Vec<Complex64> = (0..=pts)
            .map(|k| iw2 * (-x_max + 2.0 * x_max * k as f64 / pts as f64))
            .collect();
        let vals = eval_grid(f, n, &nodes, prev_vals.as_deref())?;
        let weighted: Vec<Complex64> = vals
            .par_iter()
            .enumerate()
            .map(|(idx, &v)| {
                let mut coords = [0usize; 8];
                decode(idx, n, pts + 1, &mut coords[..n]);
                let mut wgt = 1.0;
                for &c in &coords[..n] {
                    if c == 0 || c == pts {
                        wgt *= 0.5;
                    }
                }
                v * wgt
            })
            .collect();
        let dx = 2.0 * x_max / pts as f64;
        let value = Complex64::new(0.0, dx).powu(n as u32) * pairwise_sum(&weighted);
        if let Some(pv) = prev_value {
            let err = (value - pv).norm();
            let done = err <= opt.rel_tol * (1.0 + value.norm());
            if done || pts * 2 > opt.max_points {
                let peak = vals.par_iter().map(|v| v.norm()).reduce(|| 0.0, f64::max);
                let boundary = vals
                    .par_iter()
                    .enumerate()
                    .map(|(idx, v)| {
                        let mut coords = [0usize; 8];
                        decode(idx, n, pts + 1, &mut coords[..n]);
                        if coords[..n].iter().any(|&c| c == 0 || c == pts) {
                            v.norm()
                        } else {
                            0.0
                        }
                    })
                    .reduce(|| 0.0, f64::max);
                if peak > 0.0 && boundary > opt.rel_tol / 10.0 * peak {
                    return Err(Error::domain(format!(
                        "truncation window violated: boundary magnitude {boundary:.3e} \
                         exceeds rel_tol/10 of peak {peak:.3e}"
                    )));
                }
                return Ok(QuadratureResult {
                    value,
                    err_estimate: err,
                    points_per_dim: pts,
                    converged: done,
                });
            }
        } else if pts * 2 > opt.max_points {
            return Ok(QuadratureResult {
                value,
                err_estimate: f64::INFINITY,
                points_per_dim: pts,
                converged: false,
            });
        }
        prev_vals = Some(vals);
        prev_value = Some(value);
        pts *= 2;
    }
}

// ---------------------------------------------------------------------------
// Integrand builders
// ---------------------------------------------------------------------------

pub type Integrand = Box<dyn Fn(&[Complex64]) -> Result<Complex64> + Sync + Send>;

/// Builds the torus integrand for a torus-contour family, precomputing the
/// base lattice and the parameter-only Gamma factors.
pub fn torus_integrand(family: &FamilyParams, b: Option<&BaseSet>) -> Result<Integrand> {
    let pol = TruncationPolicy::default();
    match family {
        FamilyParams::Univariate(par) => {
            let b = b.ok_or_else(|| Error::Config("univariate family needs bases".into()))?;
            let ctx = GammaCtx::from_bases(b)?;
            let mut base = LogAcc::new();
            univariate_param_acc(par, &ctx, &mut base)?;
            let par = par.clone();
            Ok(Box::new(move |z: &[Complex64]| {
                let mut acc = base.clone();
                rho_univariate_acc(z[0], &par, &ctx, &mut acc)?;
                acc.finish()
            }))
        }
        FamilyParams::Cn(par) => {
            let b = b.ok_or_else(|| Error::Config("C_n family needs bases".into()))?;
            let ctx = GammaCtx::from_bases(b)?;
            let mut base = LogAcc::new();
            cn_param_acc(par, &ctx, &mut base)?;
            let par = par.clone();
            Ok(Box::new(move |z: &[Complex64]| {
                let mut acc = base.clone();
                rho_cn_acc(z, &par, &ctx, &mut acc)?;
                acc.finish()
            }))
        }
        FamilyParams::An(par) => {
            let b = b.ok_or_else(|| Error::Config("A_n family needs bases".into()))?;
            let ctx = GammaCtx::from_bases(b)?;
            let mut base = LogAcc::new();
            an_param_acc(par, &ctx, &mut base)?;
            let par = par.clone();
            Ok(Box::new(move |z: &[Complex64]| {
                let mut acc = base.clone();
                rho_an_acc(z, &par, &ctx, &mut acc)?;
                acc.finish()
            }))
        }
        FamilyParams::AnSym(par) => {
            let b = b.ok_or_else(|| Error::Config("symmetric A_n family needs bases".into()))?;
            let ctx = GammaCtx::from_bases(b)?;
            let par = par.clone();
            Ok(Box::new(move |z: &[Complex64]| {
                let mut acc = LogAcc::new();
                rho_an_sym_acc(z, &par, &ctx, &mut acc)?;
                acc.finish()
            }))
        }
        FamilyParams::Dn(par) => {
            let ctx = GammaCtx::new(par.r_tilde, par.p_tilde, &pol)?;
            let mut base = LogAcc::new();
            dn_param_acc(par, &ctx, &mut base)?;
            let par = par.clone();
            Ok(Box::new(move |z: &[Complex64]| {
                let mut acc = base.clone();
                delta_dn_acc(z, &par, &ctx, &mut acc)?;
                acc.finish()
            }))
        }
        _ => Err(Error::Config(
            "not a torus-contour family; use segment or line quadrature".into(),
        )),
    }
}

/// Builds the u-space integrand of a modified (unit-circle) family.
pub fn modified_integrand(par: &ModifiedParams) -> Result<Integrand> {
    let ctx = ModifiedCtx::new(&par.w, &TruncationPolicy::default())?;
    let mut base = LogAcc::new();
    modified_param_acc(par, &ctx, &mut base)?;
    let par = par.clone();
    Ok(Box::new(move |u: &[Complex64]| {
        let mut acc = base.clone();
        rho_modified_acc(u, &par, &ctx, &mut acc)?;
        acc.finish()
    }))
}

/// Builds the u-space integrand of a q-reduced family.
pub fn qreduced_integrand(par: &QReducedParams) -> Result<Integrand> {
    let ctx = SineCtx::new(&par.w, &TruncationPolicy::default())?;
    let mut base = LogAcc::new();
    qreduced_param_acc(par, &ctx, &mut base)?;
    let par = par.clone();
    Ok(Box::new(move |u: &[Complex64]| {
        let mut acc = base.clone();
        rho_qreduced_acc(u, &par, &ctx, &mut acc)?;
        acc.finish()
    }))
}

// ---------------------------------------------------------------------------
// Closed forms and full evaluations
// ---------------------------------------------------------------------------

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// The exact right-hand side of the family's evaluation formula.
pub fn rhs_closed_form(family: &FamilyParams, b: Option<&BaseSet>) -> Result<Complex64> {
    let pol = TruncationPolicy::default();
    let two_pi_i = Complex64::new(0.0, TWO_PI);
    let qq_pp = |q: Complex64, p: Complex64| -> Result<Complex64> {
        Ok(qpoch_inf(q, q, &pol)? * qpoch_inf(p, p, &pol)?)
    };
    match family {
        FamilyParams::Univariate(_) => {
            let b = b.ok_or_else(|| Error::Config("univariate family needs bases".into()))?;
            Ok(2.0 * two_pi_i / qq_pp(b.q, b.p)?)
        }
        FamilyParams::Cn(par) => {
            let b = b.ok_or_else(|| Error::Config("C_n family needs bases".into()))?;
            let n = par.n;
            Ok(2.0f64.powi(n as i32) * factorial(n) * two_pi_i.powu(n as u32)
                / qq_pp(b.q, b.p)?.powu(n as u32))
        }
        FamilyParams::An(par) => {
            let b = b.ok_or_else(|| Error::Config("A_n family needs bases".into()))?;
            let n = par.n;
            Ok(factorial(n + 1) * two_pi_i.powu(n as u32) / qq_pp(b.q, b.p)?.powu(n as u32))
        }
        FamilyParams::AnSym(par) => {
            let b = b.ok_or_else(|| Error::Config("symmetric A_n family needs bases".into()))?;
            let n = par.n;
            let mut v =
                factorial(n + 1) * two_pi_i.powu(n as u32) / qq_pp(b.q, b.p)?.powu(n as u32);
            let a = par.a();
            let ss = par.s_prod();
            let gam = |x: Complex64| crate::special::elliptic_gamma(x, b.q, b.p);
            for m in 0..par.t.len() {
                v *= gam(ss / par.s[m])? * gam(a / par.t[m])?;
            }
            for &tj in &par.t {
                for &sk in &par.s {
                    v *= gam(tj * sk)?;
                }
            }
            Ok(v)
        }
        FamilyParams::Dn(par) => {
            let n = par.n;
            Ok(two_pi_i.powu(n as u32) * factorial(n + 1)
                / qq_pp(par.r_tilde, par.p_tilde)?.powu(n as u32))
        }
        FamilyParams::Modified(par) => {
            let kap = kappa_auto(&par.w)?;
            let n = par.n;
            Ok(match par.family {
                ModifiedFamily::Cn => kap.powu(n as u32) * 2.0f64.powi(n as i32) * factorial(n),
                ModifiedFamily::An | ModifiedFamily::Dn => kap.powu(n as u32) * factorial(n + 1),
            })
        }
        FamilyParams::QReduced(par) => {
            let w = &par.w;
            let q = exp_2pi_i(w.omega1 / w.omega2);
            let q_tilde = exp_2pi_i(-w.omega2 / w.omega1);
            let ratio = qpoch_inf(q_tilde, q_tilde, &pol)? / qpoch_inf(q, q, &pol)?;
            let n = par.n;
            Ok(match par.family {
                ModifiedFamily::Cn => {
                    Complex64::new(-2.0, 0.0).powu(n as u32) * factorial(n) * ratio.powu(n as u32)
                }
                ModifiedFamily::An | ModifiedFamily::Dn => {
                    Complex64::new(-1.0, 0.0).powu(n as u32)
                        * factorial(n + 1)
                        * ratio.powu(n as u32)
                }
            })
        }
    }
}

/// One full verification record: quadrature vs closed form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralCheck {
    pub family: String,
    pub lhs: QuadratureResult,
    #[serde(with = "crate::wire::cpx")]
    pub rhs: Complex64,
    pub rel_err: f64,
    /// For the modified families: the change-of-variables torus evaluation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alt_lhs: Option<QuadratureResult>,
    /// Relative disagreement between the two evaluation paths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alt_agreement: Option<f64>,
}

/// Dispatches the family to the right engine and compares against the
/// closed form. Modified families additionally run the change-of-variables
/// torus route and record the agreement between the two paths.
pub fn eval_integral(
    family: &FamilyParams,
    b: Option<&BaseSet>,
    opt: &GridOptions,
) -> Result<IntegralCheck> {
    let report = validate_domain(family, b);
    if !report.ok {
        return Err(Error::Domain(report.violations.join("; ")));
    }
    let rhs = rhs_closed_form(family, b)?;
    let n = family.dim();
    match family {
        FamilyParams::Modified(par) => {
            let f = modified_integrand(par)?;
            let lhs = segment_integrate(f.as_ref(), n, &par.w, opt)?;
            let (torus_fam, tb) = modified_to_torus(par)?;
            let tf = torus_integrand(&torus_fam, Some(&tb))?;
            let tres = torus_integrate(tf.as_ref(), n, opt)?;
            let pref = crate::kernels::change_of_vars_prefactor(n, &par.w)
                * segment_measure_factor(n, &par.w);
            let alt = QuadratureResult {
                value: pref * tres.value,
                err_estimate: tres.err_estimate * pref.norm(),
                points_per_dim: tres.points_per_dim,
                converged: tres.converged,
            };
            let agreement = (lhs.value - alt.value).norm() / alt.value.norm().max(1e-300);
            let rel_err = (lhs.value - rhs).norm() / rhs.norm().max(1e-300);
            Ok(IntegralCheck {
                family: family.name(),
                lhs,
                rhs,
                rel_err,
                alt_lhs: Some(alt),
                alt_agreement: Some(agreement),
            })
        }
        FamilyParams::QReduced(par) => {
            let f = qreduced_integrand(par)?;
            let lhs = line_integrate(f.as_ref(), n, &par.w, opt)?;
            let rel_err = (lhs.value - rhs).norm() / rhs.norm().max(1e-300);
            Ok(IntegralCheck {
                family: family.name(),
                lhs,
                rhs,
                rel_err,
                alt_lhs: None,
                alt_agreement: None,
            })
        }
        _ => {
            let f = torus_integrand(family, b)?;
            let lhs = torus_integrate(f.as_ref(), n, opt)?;
            let rel_err = (lhs.value - rhs).norm() / rhs.norm().max(1e-300);
            Ok(IntegralCheck {
                family: family.name(),
                lhs,
                rhs,
                rel_err,
                alt_lhs: None,
                alt_agreement: None,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Telescoping
// ---------------------------------------------------------------------------

/// Which base scales t_1 in the telescoping check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftBase {
    Q,
    P,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TelescopeReport {
    pub family: String,
    pub shift: ShiftBase,
    /// |I(shifted) - I(t)| / |I(t)| from two independent quadratures.
    pub residual: f64,
    /// Whether the certificate's pole families stay out of the annulus
    /// 1 <= |z| <= 1/|q| (the contour-deformation hypothesis).
    pub annulus_ok: bool,
    pub annulus_violations: Vec<String>,
}

fn annulus_check_cn_like(
    t: &[Complex64],
    a_mod: f64,
    b: &BaseSet,
    margin: f64,
    viol: &mut Vec<String>,
) {
    let qn = b.q.norm();
    let pn = b.p.norm();
    let outer = 1.0 / qn;
    for (m, tm) in t.iter().enumerate() {
        if tm.norm() >= 1.0 - margin {
            viol.push(format!(
                "certificate pole t_{} (modulus {:.4}) reaches the annulus",
                m + 1,
                tm.norm()
            ));
        }
        let d = 1.0 / (tm.norm() * qn);
        if d <= outer * (1.0 + margin) {
            viol.push(format!(
                "certificate pole 1/(t_{} q) (modulus {d:.4}) reaches the annulus",
                m + 1
            ));
        }
    }
    if pn / a_mod >= 1.0 - margin {
        viol.push(format!(
            "certificate pole A^-1 p (modulus {:.4}) reaches the annulus (needs |p| < |A|)",
            pn / a_mod
        ));
    }
    let d = a_mod / (qn * pn);
    if d <= outer * (1.0 + margin) {
        viol.push(format!(
            "certificate pole A/(qp) (modulus {d:.4}) reaches the annulus"
        ));
    }
}

/// Certificate-pole annulus check: no converging certificate pole may
/// reach the unit circle and no diverging one may come down to |q|^-1.
fn annulus_check(family: &FamilyParams, b: &BaseSet, margin: f64) -> (bool, Vec<String>) {
    let mut viol = Vec::new();
    match family {
        FamilyParams::Univariate(par) => {
            annulus_check_cn_like(&par.t, par.a().norm(), b, margin, &mut viol);
        }
        FamilyParams::Cn(par) => {
            annulus_check_cn_like(&par.t, par.a().norm(), b, margin, &mut viol);
        }
        FamilyParams::An(par) => {
            let qn = b.q.norm();
            let pn = b.p.norm();
            let outer = 1.0 / qn;
            let ts = (par.t_prod() * par.s_prod()).norm();
            for (m, tm) in par.t.iter().enumerate() {
                if tm.norm() >= 1.0 - margin {
                    viol.push(format!(
                        "certificate pole t_{} (modulus {:.4}) reaches the annulus",
                        m + 1,
                        tm.norm()
                    ));
                }
                if m >= 1 {
                    // z_{n+1}^-1 diverging family t_m^-1 q^-j p^-k starts at
                    // 1/|t_m|: clears the annulus only when |t_m| < |q|.
                    let d = 1.0 / tm.norm();
                    if d <= outer * (1.0 + margin) {
                        viol.push(format!(
                            "certificate pole 1/t_{} (modulus {d:.4}) reaches the annulus \
                             (needs |t_m| < |q| for m >= 2)",
                            m + 1
                        ));
                    }
                }
            }
            for (l, sl) in par.s.iter().enumerate() {
                if sl.norm() >= 1.0 - margin {
                    viol.push(format!(
                        "certificate pole s_{} (modulus {:.4}) reaches the annulus",
                        l + 1,
                        sl.norm()
                    ));
                }
            }
            if pn / ts >= 1.0 - margin {
                viol.push(format!(
                    "certificate pole (TS)^-1 p (modulus {:.4}) reaches the annulus \
                     (needs |p| < |TS|)",
                    pn / ts
                ));
            }
            let d = ts / (qn * pn);
            if d <= outer * (1.0 + margin) {
                viol.push(format!(
                    "certificate pole TS/(qp) (modulus {d:.4}) reaches the annulus"
                ));
            }
        }
        _ => viol.push("telescoping is defined for the univariate, C_n and A_n families".into()),
    }
    (viol.is_empty(), viol)
}

/// Integrates the family at t and at (base * t_1, t_2, ...) and reports
/// the relative difference, after verifying the annulus hypothesis.
pub fn telescope_check(
    family: &FamilyParams,
    b: &BaseSet,
    opt: &GridOptions,
    shift: ShiftBase,
) -> Result<TelescopeReport> {
    let factor = match shift {
        ShiftBase::Q => b.q,
        ShiftBase::P => b.p,
    };
    let shifted = match family {
        FamilyParams::Univariate(par) => FamilyParams::Univariate(par.with_t1_scaled(factor)),
        FamilyParams::Cn(par) => FamilyParams::Cn(par.with_t1_scaled(factor)),
        FamilyParams::An(par) => FamilyParams::An(par.with_t1_scaled(factor)),
        _ => {
            return Err(Error::domain(
                "telescoping is defined for the univariate, C_n and A_n families",
            ))
        }
    };
    // The p-shift deformation mirrors the q-shift one with the bases
    // exchanged (Gamma is symmetric in q and p), so the annulus to clear
    // is 1 <= |z| <= 1/|p| with q and p swapped in the pole families.
    let b_for_annulus = match shift {
        ShiftBase::Q => *b,
        ShiftBase::P => BaseSet {
            q: b.p,
            p: b.q,
            ..*b
        },
    };
    let (annulus_ok, annulus_violations) = annulus_check(family, &b_for_annulus, 1e-6);
    for fam in [family, &shifted] {
        let rep = validate_domain(fam, Some(b));
        if !rep.ok {
            return Err(Error::Domain(rep.violations.join("; ")));
        }
    }
    let n = family.dim();
    let f = torus_integrand(family, Some(b))?;
    let i0 = torus_integrate(f.as_ref(), n, opt)?;
    let fs = torus_integrand(&shifted, Some(b))?;
    let i1 = torus_integrate(fs.as_ref(), n, opt)?;
    Ok(TelescopeReport {
        family: family.name(),
        shift,
        residual: (i1.value - i0.value).norm() / i0.value.norm().max(1e-300),
        annulus_ok,
        annulus_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::UnivariateParams;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn torus_constant_gives_2pi_i() {
        let f = |_: &[Complex64]| Ok(c(1.0, 0.0));
        let opt = GridOptions::defaults_for(1);
        let r = torus_integrate(&f, 1, &opt).unwrap();
        assert!(r.converged);
        assert!((r.value - c(0.0, TWO_PI)).norm() < 1e-12);
    }

    #[test]
    fn torus_monomials_integrate_to_zero() {
        for k in [1i32, -3, 7] {
            let f = move |z: &[Complex64]| Ok(z[0].powi(k));
            let opt = GridOptions::defaults_for(1);
            let r = torus_integrate(&f, 1, &opt).unwrap();
            assert!(r.value.norm() < 1e-14, "k={k}: {}", r.value.norm());
        }
    }

    #[test]
    fn torus_two_dims_constant() {
        let f = |_: &[Complex64]| Ok(c(1.0, 0.0));
        let opt = GridOptions::defaults_for(2);
        let r = torus_integrate(&f, 2, &opt).unwrap();
        let expect = c(0.0, TWO_PI) * c(0.0, TWO_PI);
        assert!((r.value - expect).norm() < 1e-10);
    }

    fn real_upar() -> UnivariateParams {
        UnivariateParams::new(vec![
            c(0.60, 0.0),
            c(0.65, 0.0),
            c(0.70, 0.0),
            c(0.55, 0.0),
            c(0.62, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn spectral_convergence_on_univariate_kernel() {
        let b = BaseSet::from_qp(c(0.3, 0.0), c(0.2, 0.0)).unwrap();
        let fam = FamilyParams::Univariate(real_upar());
        let f = torus_integrand(&fam, Some(&b)).unwrap();
        let rhs = rhs_closed_form(&fam, Some(&b)).unwrap();
        let at = |pts: usize| {
            let opt = GridOptions {
                initial_points: pts,
                max_points: pts,
                rel_tol: 1e-30,
                line_halfwidth: 0.0,
            };
            let r = torus_integrate(f.as_ref(), 1, &opt).unwrap();
            (r.value - rhs).norm() / rhs.norm()
        };
        let e64 = at(64);
        let e128 = at(128);
        assert!(
            e128 < 1e-2 * e64,
            "no spectral decay: err(64) = {e64:.3e}, err(128) = {e128:.3e}"
        );
    }

    #[test]
    fn univariate_integral_matches_closed_form() {
        let b = BaseSet::from_qp(c(0.3, 0.0), c(0.2, 0.0)).unwrap();
        let fam = FamilyParams::Univariate(real_upar());
        let opt = GridOptions::defaults_for(1);
        let chk = eval_integral(&fam, Some(&b), &opt).unwrap();
        assert!(chk.lhs.converged);
        assert!(chk.rel_err < 1e-8, "rel err {:.3e}", chk.rel_err);
        assert!(chk.lhs.points_per_dim <= 1024);
    }

    #[test]
    fn eval_integral_rejects_domain_violations() {
        let b = BaseSet::from_qp(c(0.3, 0.0), c(0.2, 0.0)).unwrap();
        let par = UnivariateParams::new(vec![c(0.3, 0.0); 5]).unwrap();
        let fam = FamilyParams::Univariate(par);
        let opt = GridOptions::defaults_for(1);
        assert!(matches!(
            eval_integral(&fam, Some(&b), &opt),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cn_n1_rhs_equals_univariate_rhs() {
        let b = BaseSet::from_qp(c(0.3, 0.0), c(0.2, 0.0)).unwrap();
        let u = rhs_closed_form(&FamilyParams::Univariate(real_upar()), Some(&b)).unwrap();
        let par = crate::kernels::CnParams::new(1, real_upar().t.clone()).unwrap();
        let cn = rhs_closed_form(&FamilyParams::Cn(par), Some(&b)).unwrap();
        assert!((u - cn).norm() < 1e-14);
    }

    #[test]
    fn univariate_rhs_at_p_zero_uses_single_euler_factor() {
        // (p; p) at p = 0 is 1, leaving 4 pi i / (q; q).
        let b = BaseSet {
            q: c(0.3, 0.0),
            p: c(0.0, 0.0),
            r: c(0.0, 0.0),
            q_tilde: c(0.0, 0.0),
            p_tilde: c(0.0, 0.0),
            r_tilde: c(0.0, 0.0),
            regime: None,
        };
        let rhs = rhs_closed_form(&FamilyParams::Univariate(real_upar()), Some(&b)).unwrap();
        let pol = TruncationPolicy::default();
        let expect = 2.0 * c(0.0, TWO_PI) / qpoch_inf(c(0.3, 0.0), c(0.3, 0.0), &pol).unwrap();
        assert!((rhs - expect).norm() / expect.norm() < 1e-14);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_smooth_data() {
        let v: Vec<Complex64> = (0..1000)
            .map(|k| c((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let naive: Complex64 = v.iter().sum();
        let pw = pairwise_sum(&v);
        assert!((naive - pw).norm() < 1e-10);
    }

    #[test]
    fn grid_options_validation() {
        let mut opt = GridOptions::defaults_for(1);
        opt.initial_points = 7;
        assert!(opt.validate().is_err());
        opt.initial_points = 64;
        opt.max_points = 32;
        assert!(opt.validate().is_err());
    }
}
