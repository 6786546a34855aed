//! Kernel functions and proof certificates for every integral family,
//! with parameter-domain validation and pole enumeration.
//!
//! Kernels compose elliptic gamma evaluations in log space with signed
//! infinity counting, so grid points where paired denominator factors
//! blow up (z_i = +-1, coincident coordinates) evaluate cleanly to the
//! kernel's genuine zeros instead of failing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{
    exp_2pi_i, poly_p, qpoch_log, theta_log, BaseSet, GammaLattice, LogAcc, LogVal, OmegaTriple,
    TruncationPolicy, PI, TWO_PI,
};

/// Default safety margin between any converging pole and the contour.
pub const DEFAULT_CONTOUR_MARGIN: f64 = 0.02;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn prod(v: &[Complex64]) -> Complex64 {
    v.iter().product()
}

fn sum(v: &[Complex64]) -> Complex64 {
    v.iter().sum()
}

// ---------------------------------------------------------------------------
// Parameter types
// ---------------------------------------------------------------------------

/// Five parameters of the univariate integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnivariateParams {
    #[serde(with = "crate::wire::cpx_vec")]
    pub t: Vec<Complex64>,
}

impl UnivariateParams {
    pub fn new(t: Vec<Complex64>) -> Result<Self> {
        if t.len() != 5 {
            return Err(Error::domain("univariate family needs exactly 5 parameters"));
        }
        Ok(UnivariateParams { t })
    }

    pub fn a(&self) -> Complex64 {
        prod(&self.t)
    }

    pub fn with_t1_scaled(&self, f: Complex64) -> Self {
        let mut t = self.t.clone();
        t[0] *= f;
        UnivariateParams { t }
    }
}

/// 2n+3 parameters of the C_n integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CnParams {
    pub n: usize,
    #[serde(with = "crate::wire::cpx_vec")]
    pub t: Vec<Complex64>,
}

impl CnParams {
    pub fn new(n: usize, t: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("C_n family needs n >= 1"));
        }
        if t.len() != 2 * n + 3 {
            return Err(Error::domain(format!(
                "C_n family needs 2n+3 = {} parameters, got {}",
                2 * n + 3,
                t.len()
            )));
        }
        Ok(CnParams { n, t })
    }

    pub fn a(&self) -> Complex64 {
        prod(&self.t)
    }

    pub fn with_t1_scaled(&self, f: Complex64) -> Self {
        let mut t = self.t.clone();
        t[0] *= f;
        CnParams { n: self.n, t }
    }
}

/// n+1 t-parameters and n+2 s-parameters of the A_n integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnParams {
    pub n: usize,
    #[serde(with = "crate::wire::cpx_vec")]
    pub t: Vec<Complex64>,
    #[serde(with = "crate::wire::cpx_vec")]
    pub s: Vec<Complex64>,
}

impl AnParams {
    pub fn new(n: usize, t: Vec<Complex64>, s: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("A_n family needs n >= 1"));
        }
        if t.len() != n + 1 || s.len() != n + 2 {
            return Err(Error::domain(format!(
                "A_n family needs n+1 = {} t's and n+2 = {} s's, got {}/{}",
                n + 1,
                n + 2,
                t.len(),
                s.len()
            )));
        }
        Ok(AnParams { n, t, s })
    }

    pub fn t_prod(&self) -> Complex64 {
        prod(&self.t)
    }

    pub fn s_prod(&self) -> Complex64 {
        prod(&self.s)
    }

    pub fn with_t1_scaled(&self, f: Complex64) -> Self {
        let mut t = self.t.clone();
        t[0] *= f;
        AnParams {
            n: self.n,
            t,
            s: self.s.clone(),
        }
    }
}

/// The t <-> s symmetric form: n+2 of each, balanced by A S = p q.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnSymParams {
    pub n: usize,
    #[serde(with = "crate::wire::cpx_vec")]
    pub t: Vec<Complex64>,
    #[serde(with = "crate::wire::cpx_vec")]
    pub s: Vec<Complex64>,
}

impl AnSymParams {
    pub fn new(n: usize, t: Vec<Complex64>, s: Vec<Complex64>) -> Result<Self> {
        if n == 0 || t.len() != n + 2 || s.len() != n + 2 {
            return Err(Error::domain(
                "symmetric A_n family needs n >= 1 and n+2 parameters on each side",
            ));
        }
        Ok(AnSymParams { n, t, s })
    }

    pub fn a(&self) -> Complex64 {
        prod(&self.t)
    }

    pub fn s_prod(&self) -> Complex64 {
        prod(&self.s)
    }
}

/// D_n-type family: n t-parameters, n+3 s-parameters, evaluated at its own
/// base pair (named r~, p~ after the modified-integral usage).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DnParams {
    pub n: usize,
    #[serde(with = "crate::wire::cpx_vec")]
    pub t: Vec<Complex64>,
    #[serde(with = "crate::wire::cpx_vec")]
    pub s: Vec<Complex64>,
    #[serde(with = "crate::wire::cpx")]
    pub r_tilde: Complex64,
    #[serde(with = "crate::wire::cpx")]
    pub p_tilde: Complex64,
}

impl DnParams {
    pub fn new(
        n: usize,
        t: Vec<Complex64>,
        s: Vec<Complex64>,
        r_tilde: Complex64,
        p_tilde: Complex64,
    ) -> Result<Self> {
        if n == 0 || t.len() != n || s.len() != n + 3 {
            return Err(Error::domain(
                "D_n family needs n t-parameters and n+3 s-parameters",
            ));
        }
        Ok(DnParams {
            n,
            t,
            s,
            r_tilde,
            p_tilde,
        })
    }

    pub fn d_prod(&self) -> Complex64 {
        prod(&self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModifiedFamily {
    Cn,
    An,
    Dn,
}

/// Parameters of the unit-circle (modified) integrals built from G.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModifiedParams {
    pub family: ModifiedFamily,
    pub n: usize,
    #[serde(with = "crate::wire::cpx_vec")]
    pub g: Vec<Complex64>,
    #[serde(with = "crate::wire::cpx_vec")]
    pub h: Vec<Complex64>,
    pub w: OmegaTriple,
}

impl ModifiedParams {
    pub fn cn(n: usize, g: Vec<Complex64>, w: OmegaTriple) -> Result<Self> {
        if n == 0 || g.len() != 2 * n + 3 {
            return Err(Error::domain("modified C_n needs 2n+3 g-parameters"));
        }
        Ok(ModifiedParams {
            family: ModifiedFamily::Cn,
            n,
            g,
            h: Vec::new(),
            w,
        })
    }

    pub fn an(n: usize, g: Vec<Complex64>, h: Vec<Complex64>, w: OmegaTriple) -> Result<Self> {
        if n == 0 || g.len() != n + 1 || h.len() != n + 2 {
            return Err(Error::domain(
                "modified A_n needs n+1 g-parameters and n+2 h-parameters",
            ));
        }
        Ok(ModifiedParams {
            family: ModifiedFamily::An,
            n,
            g,
            h,
            w,
        })
    }

    pub fn dn(n: usize, g: Vec<Complex64>, h: Vec<Complex64>, w: OmegaTriple) -> Result<Self> {
        if n == 0 || g.len() != n + 3 || h.len() != n {
            return Err(Error::domain(
                "modified D_n needs n+3 g-parameters and n h-parameters",
            ));
        }
        Ok(ModifiedParams {
            family: ModifiedFamily::Dn,
            n,
            g,
            h,
            w,
        })
    }

    /// Sum of the g-parameters (the script-A / F of the displays).
    pub fn g_sum(&self) -> Complex64 {
        sum(&self.g)
    }

    pub fn h_sum(&self) -> Complex64 {
        sum(&self.h)
    }
}

/// Parameters of the q-reduced integrals built from the double sine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QReducedParams {
    pub family: ModifiedFamily,
    pub n: usize,
    #[serde(with = "crate::wire::cpx_vec")]
    pub g: Vec<Complex64>,
    #[serde(with = "crate::wire::cpx_vec")]
    pub h: Vec<Complex64>,
    /// omega3 is unused by this family.
    pub w: OmegaTriple,
}

impl QReducedParams {
    pub fn cn(n: usize, g: Vec<Complex64>, w: OmegaTriple) -> Result<Self> {
        if n == 0 || g.len() != 2 * n + 3 {
            return Err(Error::domain("q-reduced C_n needs 2n+3 g-parameters"));
        }
        Ok(QReducedParams {
            family: ModifiedFamily::Cn,
            n,
            g,
            h: Vec::new(),
            w,
        })
    }

    pub fn an(n: usize, g: Vec<Complex64>, h: Vec<Complex64>, w: OmegaTriple) -> Result<Self> {
        if n == 0 || g.len() != n + 1 || h.len() != n + 2 {
            return Err(Error::domain(
                "q-reduced A_n needs n+1 g-parameters and n+2 h-parameters",
            ));
        }
        Ok(QReducedParams {
            family: ModifiedFamily::An,
            n,
            g,
            h,
            w,
        })
    }

    pub fn dn(n: usize, g: Vec<Complex64>, h: Vec<Complex64>, w: OmegaTriple) -> Result<Self> {
        if n == 0 || g.len() != n + 3 || h.len() != n {
            return Err(Error::domain(
                "q-reduced D_n needs n+3 g-parameters and n h-parameters",
            ));
        }
        Ok(QReducedParams {
            family: ModifiedFamily::Dn,
            n,
            g,
            h,
            w,
        })
    }

    pub fn g_sum(&self) -> Complex64 {
        sum(&self.g)
    }

    pub fn h_sum(&self) -> Complex64 {
        sum(&self.h)
    }

    pub fn with_g1_shifted(&self, delta: Complex64) -> Self {
        let mut g = self.g.clone();
        g[0] += delta;
        QReducedParams {
            family: self.family,
            n: self.n,
            g,
            h: self.h.clone(),
            w: self.w,
        }
    }
}

/// Tagged union over every integral family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyParams {
    Univariate(UnivariateParams),
    Cn(CnParams),
    An(AnParams),
    AnSym(AnSymParams),
    Dn(DnParams),
    Modified(ModifiedParams),
    QReduced(QReducedParams),
}

impl FamilyParams {
    pub fn name(&self) -> String {
        match self {
            FamilyParams::Univariate(_) => "univariate".into(),
            FamilyParams::Cn(p) => format!("cn_n{}", p.n),
            FamilyParams::An(p) => format!("an_n{}", p.n),
            FamilyParams::AnSym(p) => format!("an_sym_n{}", p.n),
            FamilyParams::Dn(p) => format!("dn_n{}", p.n),
            FamilyParams::Modified(p) => format!("{:?}_unit_n{}", p.family, p.n).to_lowercase(),
            FamilyParams::QReduced(p) => format!("{:?}_q_n{}", p.family, p.n).to_lowercase(),
        }
    }

    /// Number of integration variables.
    pub fn dim(&self) -> usize {
        match self {
            FamilyParams::Univariate(_) => 1,
            FamilyParams::Cn(p) => p.n,
            FamilyParams::An(p) => p.n,
            FamilyParams::AnSym(p) => p.n,
            FamilyParams::Dn(p) => p.n,
            FamilyParams::Modified(p) => p.n,
            FamilyParams::QReduced(p) => p.n,
        }
    }
}

// ---------------------------------------------------------------------------
// Domain validation
// ---------------------------------------------------------------------------

/// Outcome of `validate_domain`: either ok or the list of violated
/// constraints, each spelled against the theorem it came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainReport {
    pub ok: bool,
    pub violations: Vec<String>,
}

impl DomainReport {
    fn from_violations(violations: Vec<String>) -> Self {
        DomainReport {
            ok: violations.is_empty(),
            violations,
        }
    }
}

fn check_inside(v: &mut Vec<String>, label: &str, x: Complex64, margin: f64) {
    if x.norm() >= 1.0 {
        v.push(format!("|{label}| = {:.6} must be < 1", x.norm()));
    } else if 1.0 - x.norm() < margin {
        v.push(format!(
            "pole at {label} (modulus {:.6}) is within margin {margin} of the contour",
            x.norm()
        ));
    }
}

fn torus_pole_margins(v: &mut Vec<String>, label: &str, ratio: f64, margin: f64) {
    if ratio >= 1.0 {
        v.push(format!("{label}: pole modulus {ratio:.6} must be < 1"));
    } else if 1.0 - ratio < margin {
        v.push(format!(
            "{label}: pole modulus {ratio:.6} within margin {margin} of the contour"
        ));
    }
}

/// Checks every inequality of the corresponding theorem plus a pole-margin
/// safety band around the contour.
pub fn validate_domain(family: &FamilyParams, b: Option<&BaseSet>) -> DomainReport {
    validate_domain_with_margin(family, b, DEFAULT_CONTOUR_MARGIN)
}

pub fn validate_domain_with_margin(
    family: &FamilyParams,
    b: Option<&BaseSet>,
    margin: f64,
) -> DomainReport {
    let mut v = Vec::new();
    match family {
        FamilyParams::Univariate(par) => {
            if let Some(b) = require_bases(b, &mut v) {
                validate_cn_like(&par.t, b, margin, &mut v);
            }
        }
        FamilyParams::Cn(par) => {
            if let Some(b) = require_bases(b, &mut v) {
                validate_cn_like(&par.t, b, margin, &mut v);
            }
        }
        FamilyParams::An(par) => {
            if let Some(b) = require_bases(b, &mut v) {
                validate_bases_inside(b, &mut v);
                for (m, tm) in par.t.iter().enumerate() {
                    check_inside(&mut v, &format!("t_{}", m + 1), *tm, margin);
                }
                for (l, sl) in par.s.iter().enumerate() {
                    check_inside(&mut v, &format!("s_{}", l + 1), *sl, margin);
                }
                let ts = par.t_prod() * par.s_prod();
                let pq = (b.p * b.q).norm();
                if pq >= ts.norm() {
                    v.push(format!(
                        "|pq| = {:.6} must be < |TS| = {:.6}",
                        pq,
                        ts.norm()
                    ));
                } else {
                    torus_pole_margins(&mut v, "(TS)^-1 qp", pq / ts.norm(), margin);
                }
            }
        }
        FamilyParams::AnSym(par) => {
            if let Some(b) = require_bases(b, &mut v) {
                validate_bases_inside(b, &mut v);
                for (m, tm) in par.t.iter().enumerate() {
                    check_inside(&mut v, &format!("t_{}", m + 1), *tm, margin);
                }
                for (l, sl) in par.s.iter().enumerate() {
                    check_inside(&mut v, &format!("s_{}", l + 1), *sl, margin);
                }
                let bal = par.a() * par.s_prod() - b.p * b.q;
                let pq = (b.p * b.q).norm();
                if bal.norm() > 1e-12 * pq {
                    v.push(format!(
                        "balancing |AS - pq| = {:.3e} exceeds 1e-12 |pq|",
                        bal.norm()
                    ));
                }
            }
        }
        FamilyParams::Dn(par) => {
            let pr = (par.p_tilde * par.r_tilde).norm();
            if par.p_tilde.norm() >= 1.0 || par.r_tilde.norm() >= 1.0 {
                v.push("D_n bases |r~|, |p~| must be < 1".into());
            }
            for (j, sj) in par.s.iter().enumerate() {
                check_inside(&mut v, &format!("s_{}", j + 1), *sj, margin);
            }
            for (m, tm) in par.t.iter().enumerate() {
                check_inside(&mut v, &format!("t_{}", m + 1), *tm, margin);
            }
            let d = par.d_prod();
            for (m, tm) in par.t.iter().enumerate() {
                let dt = (d * tm).norm();
                if pr >= dt {
                    v.push(format!(
                        "|p~ r~| = {pr:.6} must be < |D t_{}| = {dt:.6}",
                        m + 1
                    ));
                } else {
                    torus_pole_margins(
                        &mut v,
                        &format!("(D t_{})^-1 p~ r~", m + 1),
                        pr / dt,
                        margin,
                    );
                }
            }
        }
        FamilyParams::Modified(par) => validate_modified(par, margin, &mut v),
        FamilyParams::QReduced(par) => validate_qreduced(par, margin, &mut v),
    }
    DomainReport::from_violations(v)
}

fn require_bases<'a>(b: Option<&'a BaseSet>, v: &mut Vec<String>) -> Option<&'a BaseSet> {
    if b.is_none() {
        v.push("this family needs an explicit base set".into());
    }
    b
}

fn validate_bases_inside(b: &BaseSet, v: &mut Vec<String>) {
    if b.q.norm() >= 1.0 || b.p.norm() >= 1.0 {
        v.push(format!(
            "bases must satisfy |q| < 1, |p| < 1 (got {:.6}, {:.6})",
            b.q.norm(),
            b.p.norm()
        ));
    }
}

fn validate_cn_like(t: &[Complex64], b: &BaseSet, margin: f64, v: &mut Vec<String>) {
    validate_bases_inside(b, v);
    for (m, tm) in t.iter().enumerate() {
        check_inside(v, &format!("t_{}", m + 1), *tm, margin);
    }
    let a = prod(t);
    let pq = (b.p * b.q).norm();
    if pq >= a.norm() {
        v.push(format!("|pq| = {:.6} must be < |A| = {:.6}", pq, a.norm()));
    } else {
        torus_pole_margins(v, "A^-1 qp", pq / a.norm(), margin);
    }
}

fn validate_modified(par: &ModifiedParams, margin: f64, v: &mut Vec<String>) {
    let w = &par.w;
    let r12 = w.omega1 / w.omega2;
    let r31 = w.omega3 / w.omega1;
    let r32 = w.omega3 / w.omega2;
    if r12.im < -1e-14 {
        v.push(format!("Im(omega1/omega2) = {:.3e} must be >= 0", r12.im));
    }
    if r31.im <= 0.0 {
        v.push(format!("Im(omega3/omega1) = {:.3e} must be > 0", r31.im));
    }
    if r32.im <= 0.0 {
        v.push(format!("Im(omega3/omega2) = {:.3e} must be > 0", r32.im));
    }
    let check_g = |v: &mut Vec<String>, label: &str, x: Complex64| {
        let ratio = x / w.omega3;
        if ratio.im >= 0.0 {
            v.push(format!("Im({label}/omega3) = {:.3e} must be < 0", ratio.im));
        }
    };
    for (m, gm) in par.g.iter().enumerate() {
        check_g(&mut *v, &format!("g_{}", m + 1), *gm);
    }
    for (j, hj) in par.h.iter().enumerate() {
        check_g(&mut *v, &format!("h_{}", j + 1), *hj);
    }
    let w12 = w.omega1 + w.omega2;
    match par.family {
        ModifiedFamily::Cn => {
            let x = (par.g_sum() - w12) / w.omega3;
            if x.im <= 0.0 {
                v.push(format!(
                    "Im((A - omega1 - omega2)/omega3) = {:.3e} must be > 0",
                    x.im
                ));
            }
        }
        ModifiedFamily::An => {
            let x = (par.g_sum() + par.h_sum() - w12) / w.omega3;
            if x.im <= 0.0 {
                v.push(format!(
                    "Im((F + H - omega1 - omega2)/omega3) = {:.3e} must be > 0",
                    x.im
                ));
            }
        }
        ModifiedFamily::Dn => {
            for (m, hm) in par.h.iter().enumerate() {
                let x = (par.g_sum() + hm - w12) / w.omega3;
                if x.im <= 0.0 {
                    v.push(format!(
                        "Im((F + h_{} - omega1 - omega2)/omega3) = {:.3e} must be > 0",
                        m + 1,
                        x.im
                    ));
                }
            }
        }
    }
    // Pole margins in the mapped z-plane, where the contour is the circle.
    if v.is_empty() {
        match modified_to_torus(par) {
            Ok((fam, b)) => {
                let mut sub = validate_domain_with_margin(&fam, Some(&b), margin);
                v.append(&mut sub.violations);
            }
            Err(e) => v.push(e.to_string()),
        }
    }
}

/// Maps modified parameters to the torus family they reduce to under
/// z_j = exp(-2 pi i u_j / omega3), with bases (r~, p~).
pub(crate) fn modified_to_torus(par: &ModifiedParams) -> Result<(FamilyParams, BaseSet)> {
    let w = &par.w;
    let map = |x: &Complex64| exp_2pi_i(-x / w.omega3);
    let b0 = w.bases();
    let b = BaseSet::from_qp(b0.r_tilde, b0.p_tilde)?;
    let fam = match par.family {
        ModifiedFamily::Cn => {
            FamilyParams::Cn(CnParams::new(par.n, par.g.iter().map(map).collect())?)
        }
        ModifiedFamily::An => FamilyParams::An(AnParams::new(
            par.n,
            par.g.iter().map(map).collect(),
            par.h.iter().map(map).collect(),
        )?),
        ModifiedFamily::Dn => FamilyParams::Dn(DnParams::new(
            par.n,
            par.h.iter().map(map).collect(),
            par.g.iter().map(map).collect(),
            b0.r_tilde,
            b0.p_tilde,
        )?),
    };
    Ok((fam, b))
}

fn validate_qreduced(par: &QReducedParams, margin: f64, v: &mut Vec<String>) {
    let w = &par.w;
    let r12 = w.omega1 / w.omega2;
    if r12.im < -1e-14 {
        v.push(format!("Im(omega1/omega2) = {:.3e} must be >= 0", r12.im));
    }
    if r12.im <= 1e-12 {
        v.push(format!(
            "Im(omega1/omega2) = {:.3e} must be > 0 for the product form of the double sine",
            r12.im
        ));
    }
    if r12.re <= 0.0 {
        v.push(format!("Re(omega1/omega2) = {:.3e} must be > 0", r12.re));
    }
    let re2 = |x: Complex64| (x / w.omega2).re;
    for (m, gm) in par.g.iter().enumerate() {
        let x = re2(*gm);
        if x <= 0.0 {
            v.push(format!("Re(g_{}/omega2) = {x:.3e} must be > 0", m + 1));
        } else if x < margin {
            v.push(format!(
                "pole from g_{} at distance {x:.4} < margin {margin} from the line",
                m + 1
            ));
        }
    }
    for (j, hj) in par.h.iter().enumerate() {
        let x = re2(*hj);
        if x <= 0.0 {
            v.push(format!("Re(h_{}/omega2) = {x:.3e} must be > 0", j + 1));
        } else if x < margin {
            v.push(format!(
                "pole from h_{} at distance {x:.4} < margin {margin} from the line",
                j + 1
            ));
        }
    }
    match par.family {
        ModifiedFamily::Cn => {
            let x = re2(par.g_sum() - w.omega1);
            if x >= 1.0 {
                v.push(format!("Re((A - omega1)/omega2) = {x:.4} must be < 1"));
            } else if 1.0 - x < margin {
                v.push(format!(
                    "pole from A at distance {:.4} < margin {margin} from the line",
                    1.0 - x
                ));
            }
        }
        ModifiedFamily::An => {
            let x = re2(par.g_sum() + par.h_sum() - w.omega1);
            if x >= 1.0 {
                v.push(format!("Re((F + H - omega1)/omega2) = {x:.4} must be < 1"));
            } else if 1.0 - x < margin {
                v.push(format!(
                    "pole from F+H at distance {:.4} < margin {margin} from the line",
                    1.0 - x
                ));
            }
        }
        ModifiedFamily::Dn => {
            for (m, hm) in par.h.iter().enumerate() {
                let x = re2(par.g_sum() + hm - w.omega1);
                if x >= 1.0 {
                    v.push(format!(
                        "Re((F + h_{} - omega1)/omega2) = {x:.4} must be < 1",
                        m + 1
                    ));
                } else if 1.0 - x < margin {
                    v.push(format!(
                        "pole from F+h_{} at distance {:.4} < margin {margin} from the line",
                        m + 1,
                        1.0 - x
                    ));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Pole enumeration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleDirection {
    TowardZero,
    TowardInfinity,
}

/// Which coordinate a pole point constrains: a single integration variable
/// or the product z_1...z_n (the A_n-type z_{n+1}^-1 entries).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleCoord {
    Z,
    ZProd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolePoint {
    #[serde(with = "crate::wire::cpx")]
    pub location: Complex64,
    pub direction: PoleDirection,
    /// (parameter index m, lattice j, lattice k); m is 1-based, 0 marks the
    /// product-derived family (A^-1 qp and relatives).
    pub source: (usize, usize, usize),
    pub coord: PoleCoord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoleList {
    pub points: Vec<PolePoint>,
}

impl PoleList {
    pub fn max_toward_zero_modulus(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| p.direction == PoleDirection::TowardZero)
            .map(|p| p.location.norm())
            .fold(0.0, f64::max)
    }
}

/// Default enumeration depth: smallest d with max(|q|, |p|)^d < 1e-6.
pub fn default_pole_depth(q: Complex64, p: Complex64) -> usize {
    let m = q.norm().max(p.norm());
    if m <= 0.0 {
        return 1;
    }
    ((-6.0 * std::f64::consts::LN_10 / m.ln()).ceil() as usize).max(1)
}

struct LatticePusher<'a> {
    points: &'a mut Vec<PolePoint>,
    depth: usize,
}

impl LatticePusher<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        m: usize,
        base: Complex64,
        q: Complex64,
        p: Complex64,
        dir: PoleDirection,
        coord: PoleCoord,
        j0: usize,
        k0: usize,
    ) {
        let mut qj = q.powu(j0 as u32);
        for j in 0..self.depth {
            let mut w = qj * p.powu(k0 as u32);
            for k in 0..self.depth {
                self.points.push(PolePoint {
                    location: base * w,
                    direction: dir,
                    source: (m, j + j0, k + k0),
                    coord,
                });
                w *= p;
            }
            qj *= q;
        }
    }
}

/// Enumerates the kernel's converging and diverging pole families for
/// j, k < depth, with direction tags.
pub fn pole_list(family: &FamilyParams, b: Option<&BaseSet>, depth: usize) -> Result<PoleList> {
    use PoleCoord::*;
    use PoleDirection::*;
    let depth = depth.max(1);
    let mut points = Vec::new();
    let mut lp = LatticePusher {
        points: &mut points,
        depth,
    };
    match family {
        FamilyParams::Univariate(par) => {
            let b = b.ok_or_else(|| Error::domain("pole_list needs bases for this family"))?;
            let (q, p, qi, pi) = (b.q, b.p, 1.0 / b.q, 1.0 / b.p);
            let a = par.a();
            for (m, tm) in par.t.iter().enumerate() {
                lp.push(m + 1, *tm, q, p, TowardZero, Z, 0, 0);
                lp.push(m + 1, 1.0 / tm, qi, pi, TowardInfinity, Z, 0, 0);
            }
            lp.push(0, 1.0 / a, q, p, TowardZero, Z, 1, 1);
            lp.push(0, a, qi, pi, TowardInfinity, Z, 1, 1);
        }
        FamilyParams::Cn(par) => {
            let b = b.ok_or_else(|| Error::domain("pole_list needs bases for this family"))?;
            let (q, p, qi, pi) = (b.q, b.p, 1.0 / b.q, 1.0 / b.p);
            let a = par.a();
            for (m, tm) in par.t.iter().enumerate() {
                lp.push(m + 1, *tm, q, p, TowardZero, Z, 0, 0);
                lp.push(m + 1, 1.0 / tm, qi, pi, TowardInfinity, Z, 0, 0);
            }
            lp.push(0, 1.0 / a, q, p, TowardZero, Z, 1, 1);
            lp.push(0, a, qi, pi, TowardInfinity, Z, 1, 1);
        }
        FamilyParams::An(par) => {
            let b = b.ok_or_else(|| Error::domain("pole_list needs bases for this family"))?;
            let (q, p, qi, pi) = (b.q, b.p, 1.0 / b.q, 1.0 / b.p);
            let ts = par.t_prod() * par.s_prod();
            for (m, tm) in par.t.iter().enumerate() {
                lp.push(m + 1, *tm, q, p, TowardZero, Z, 0, 0);
                lp.push(m + 1, 1.0 / tm, qi, pi, TowardInfinity, ZProd, 0, 0);
            }
            lp.push(0, 1.0 / ts, q, p, TowardZero, Z, 1, 1);
            lp.push(0, ts, qi, pi, TowardInfinity, ZProd, 1, 1);
            for (l, sl) in par.s.iter().enumerate() {
                lp.push(l + 1, 1.0 / sl, qi, pi, TowardInfinity, Z, 0, 0);
                lp.push(l + 1, *sl, q, p, TowardZero, ZProd, 0, 0);
            }
        }
        FamilyParams::AnSym(par) => {
            let b = b.ok_or_else(|| Error::domain("pole_list needs bases for this family"))?;
            let (q, p, qi, pi) = (b.q, b.p, 1.0 / b.q, 1.0 / b.p);
            for (m, tm) in par.t.iter().enumerate() {
                lp.push(m + 1, *tm, q, p, TowardZero, Z, 0, 0);
                lp.push(m + 1, 1.0 / tm, qi, pi, TowardInfinity, ZProd, 0, 0);
            }
            for (l, sl) in par.s.iter().enumerate() {
                lp.push(l + 1, 1.0 / sl, qi, pi, TowardInfinity, Z, 0, 0);
                lp.push(l + 1, *sl, q, p, TowardZero, ZProd, 0, 0);
            }
        }
        FamilyParams::Dn(par) => {
            let (q, p) = (par.r_tilde, par.p_tilde);
            let (qi, pi) = (1.0 / q, 1.0 / p);
            let d = par.d_prod();
            for (j, sj) in par.s.iter().enumerate() {
                lp.push(j + 1, *sj, q, p, TowardZero, Z, 0, 0);
                lp.push(j + 1, 1.0 / sj, qi, pi, TowardInfinity, ZProd, 0, 0);
            }
            for (m, tm) in par.t.iter().enumerate() {
                lp.push(m + 1, 1.0 / tm, qi, pi, TowardInfinity, Z, 0, 0);
                lp.push(m + 1, *tm, q, p, TowardZero, ZProd, 0, 0);
                // Denominator Gamma(D t_m z_i^-1) zeros: diverging.
                lp.push(m + 1, d * tm / (q * p), qi, pi, TowardInfinity, Z, 1, 1);
            }
        }
        FamilyParams::Modified(par) => {
            let (fam, bb) = modified_to_torus(par)?;
            return pole_list(&fam, Some(&bb), depth);
        }
        FamilyParams::QReduced(par) => {
            // Points in the u-plane. TowardZero tags the half-plane
            // Re(u/omega2) < 0, TowardInfinity the other one; the contour is
            // Re(u/omega2) = 0. Cross-factor poles in u_i - u_j sit at
            // Re(./omega2) >= 1 + Re(omega1/omega2) and are never close.
            let w = par.w;
            let mut push_lat = |m: usize, base: Complex64, sgn: f64, coord| {
                for j in 0..depth {
                    for k in 0..depth {
                        let loc = sgn * (base + (j as f64) * w.omega1 + (k as f64) * w.omega2);
                        let dir = if (loc / w.omega2).re < 0.0 {
                            TowardZero
                        } else {
                            TowardInfinity
                        };
                        points.push(PolePoint {
                            location: loc,
                            direction: dir,
                            source: (m, j, k),
                            coord,
                        });
                    }
                }
            };
            match par.family {
                ModifiedFamily::Cn => {
                    for (m, gm) in par.g.iter().enumerate() {
                        push_lat(m + 1, *gm, 1.0, Z);
                        push_lat(m + 1, *gm, -1.0, Z);
                    }
                    let aa = par.g_sum();
                    push_lat(0, w.omega1 + w.omega2 - aa, 1.0, Z);
                    push_lat(0, aa - w.omega1 - w.omega2, 1.0, Z);
                }
                ModifiedFamily::An => {
                    for (m, gm) in par.g.iter().enumerate() {
                        push_lat(m + 1, *gm, 1.0, Z);
                        push_lat(m + 1, *gm, 1.0, ZProd);
                    }
                    for (j, hj) in par.h.iter().enumerate() {
                        push_lat(j + 1, -*hj, 1.0, Z);
                        push_lat(j + 1, -*hj, 1.0, ZProd);
                    }
                    push_lat(0, w.omega1 + w.omega2 - par.g_sum() - par.h_sum(), 1.0, Z);
                }
                ModifiedFamily::Dn => {
                    for (j, gj) in par.g.iter().enumerate() {
                        push_lat(j + 1, *gj, 1.0, Z);
                    }
                    for (m, hm) in par.h.iter().enumerate() {
                        push_lat(m + 1, -*hm, 1.0, Z);
                        push_lat(m + 1, w.omega1 + w.omega2 - par.g_sum() - hm, 1.0, Z);
                    }
                }
            }
        }
    }
    Ok(PoleList { points })
}

// ---------------------------------------------------------------------------
// Gamma / theta evaluation context
// ---------------------------------------------------------------------------

/// Bundles the precomputed gamma lattice and truncation policy so one
/// integral or identity batch reuses the base-dependent tables.
pub(crate) struct GammaCtx {
    lat: GammaLattice,
    pub(crate) pol: TruncationPolicy,
    pub(crate) p: Complex64,
}

impl GammaCtx {
    pub(crate) fn new(q: Complex64, p: Complex64, pol: &TruncationPolicy) -> Result<Self> {
        let lat = GammaLattice::new(q, p, pol, 8.0)?;
        Ok(GammaCtx { lat, pol: *pol, p })
    }

    pub(crate) fn from_bases(b: &BaseSet) -> Result<Self> {
        GammaCtx::new(b.q, b.p, &TruncationPolicy::default())
    }

    fn mul_gam(&self, acc: &mut LogAcc, x: Complex64) -> Result<()> {
        acc.mul(self.lat.eval_log(x)?, "elliptic_gamma", x);
        Ok(())
    }

    fn div_gam(&self, acc: &mut LogAcc, x: Complex64) -> Result<()> {
        acc.div(self.lat.eval_log(x)?, "elliptic_gamma", x);
        Ok(())
    }

    fn mul_theta_p(&self, acc: &mut LogAcc, x: Complex64) -> Result<()> {
        acc.mul(theta_log(x, self.p, &self.pol)?, "theta", x);
        Ok(())
    }

    fn div_theta_p(&self, acc: &mut LogAcc, x: Complex64) -> Result<()> {
        acc.div(theta_log(x, self.p, &self.pol)?, "theta", x);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Univariate kernel and certificate
// ---------------------------------------------------------------------------

pub(crate) fn rho_univariate_acc(
    z: Complex64,
    par: &UnivariateParams,
    ctx: &GammaCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    let a = par.a();
    let zi = one() / z;
    for &tm in &par.t {
        ctx.mul_gam(acc, tm * z)?;
        ctx.mul_gam(acc, tm * zi)?;
    }
    ctx.div_gam(acc, z * z)?;
    ctx.div_gam(acc, zi * zi)?;
    ctx.div_gam(acc, a * z)?;
    ctx.div_gam(acc, a * zi)?;
    Ok(())
}

pub(crate) fn univariate_param_acc(
    par: &UnivariateParams,
    ctx: &GammaCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    let a = par.a();
    for &tm in &par.t {
        ctx.mul_gam(acc, a / tm)?;
    }
    for m in 0..5 {
        for s in (m + 1)..5 {
            ctx.div_gam(acc, par.t[m] * par.t[s])?;
        }
    }
    Ok(())
}

/// The univariate kernel rho(z, t_1..t_5).
pub fn rho_univariate(z: Complex64, par: &UnivariateParams, b: &BaseSet) -> Result<Complex64> {
    let ctx = GammaCtx::from_bases(b)?;
    let mut acc = LogAcc::new();
    univariate_param_acc(par, &ctx, &mut acc)?;
    rho_univariate_acc(z, par, &ctx, &mut acc)?;
    acc.finish()
}

/// The univariate certificate
/// g(z, t) = rho(z, t) prod_j theta(t_j z) / prod_{j>=2} theta(t_1 t_j)
///           * theta(t_1 A) / theta(z^2, A z) * t_1 / z.
pub fn cert_g_univariate(
    z: Complex64,
    par: &UnivariateParams,
    b: &BaseSet,
) -> Result<Complex64> {
    let ctx = GammaCtx::from_bases(b)?;
    let mut acc = LogAcc::new();
    univariate_param_acc(par, &ctx, &mut acc)?;
    rho_univariate_acc(z, par, &ctx, &mut acc)?;
    let a = par.a();
    for &tj in &par.t {
        ctx.mul_theta_p(&mut acc, tj * z)?;
    }
    for &tj in &par.t[1..] {
        ctx.div_theta_p(&mut acc, par.t[0] * tj)?;
    }
    ctx.mul_theta_p(&mut acc, par.t[0] * a)?;
    ctx.div_theta_p(&mut acc, z * z)?;
    ctx.div_theta_p(&mut acc, a * z)?;
    acc.mul_scalar(par.t[0] / z);
    acc.finish()
}

/// Both sides of the divided form of the univariate difference equation.
/// Elliptic functions of log z; equal everywhere, exactly -1 at z = t_1.
pub fn eqn_exp_univariate_sides(
    z: Complex64,
    par: &UnivariateParams,
    b: &BaseSet,
) -> Result<(Complex64, Complex64)> {
    let pol = TruncationPolicy::default();
    let p = b.p;
    let th =
        |x: Complex64| -> Result<Complex64> { theta_log(x, p, &pol)?.exp_value("theta", x) };
    let t = &par.t;
    let a = par.a();
    let zi = one() / z;
    let mut lhs = th(t[0] * z)? * th(t[0] * zi)? / (th(a * z)? * th(a * zi)?);
    for &tj in &t[1..] {
        lhs *= th(a / tj)? / th(t[0] * tj)?;
    }
    lhs -= one();
    let mut pref = t[0] / (z * th(z * z)?);
    for &tj in &t[1..] {
        pref /= th(t[0] * tj)?;
    }
    pref *= th(t[0] * a)?;
    let mut term_m = z.powi(4) / th(a * zi)?;
    let mut term_p = one() / th(a * z)?;
    for &tj in t {
        term_m *= th(tj * zi)?;
        term_p *= th(tj * z)?;
    }
    Ok((lhs, pref * (term_m - term_p)))
}

// ---------------------------------------------------------------------------
// C_n kernel and certificate
// ---------------------------------------------------------------------------

pub(crate) fn rho_cn_acc(
    z: &[Complex64],
    par: &CnParams,
    ctx: &GammaCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    let a = par.a();
    let n = z.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let (zi, zj) = (z[i], z[j]);
            ctx.div_gam(acc, zi * zj)?;
            ctx.div_gam(acc, zi / zj)?;
            ctx.div_gam(acc, zj / zi)?;
            ctx.div_gam(acc, one() / (zi * zj))?;
        }
    }
    for &zi in z {
        let zinv = one() / zi;
        for &tm in &par.t {
            ctx.mul_gam(acc, tm * zi)?;
            ctx.mul_gam(acc, tm * zinv)?;
        }
        ctx.div_gam(acc, zi * zi)?;
        ctx.div_gam(acc, zinv * zinv)?;
        ctx.div_gam(acc, a * zi)?;
        ctx.div_gam(acc, a * zinv)?;
    }
    Ok(())
}

pub(crate) fn cn_param_acc(par: &CnParams, ctx: &GammaCtx, acc: &mut LogAcc) -> Result<()> {
    let a = par.a();
    for &tm in &par.t {
        ctx.mul_gam(acc, a / tm)?;
    }
    let k = par.t.len();
    for m in 0..k {
        for s in (m + 1)..k {
            ctx.div_gam(acc, par.t[m] * par.t[s])?;
        }
    }
    Ok(())
}

/// The C_n kernel rho(z, t; C_n), z of length n, t of length 2n+3.
pub fn rho_cn(z: &[Complex64], par: &CnParams, b: &BaseSet) -> Result<Complex64> {
    if z.len() != par.n {
        return Err(Error::domain("rho_cn needs n coordinates"));
    }
    let ctx = GammaCtx::from_bases(b)?;
    let mut acc = LogAcc::new();
    cn_param_acc(par, &ctx, &mut acc)?;
    rho_cn_acc(z, par, &ctx, &mut acc)?;
    acc.finish()
}

/// The C_n certificate g_i(z, t); `i` is 0-based.
pub fn cert_g_cn(i: usize, z: &[Complex64], par: &CnParams, b: &BaseSet) -> Result<Complex64> {
    if i >= z.len() || z.len() != par.n {
        return Err(Error::domain("cert_g_cn index/coordinates out of range"));
    }
    let ctx = GammaCtx::from_bases(b)?;
    let mut acc = LogAcc::new();
    cn_param_acc(par, &ctx, &mut acc)?;
    rho_cn_acc(z, par, &ctx, &mut acc)?;
    let t1 = par.t[0];
    let a = par.a();
    let zi = z[i];
    for (j, &zj) in z.iter().enumerate() {
        if j == i {
            continue;
        }
        ctx.mul_theta_p(&mut acc, t1 * zj)?;
        ctx.mul_theta_p(&mut acc, t1 / zj)?;
        ctx.div_theta_p(&mut acc, zi * zj)?;
        ctx.div_theta_p(&mut acc, zi / zj)?;
    }
    for &tj in &par.t {
        ctx.mul_theta_p(&mut acc, tj * zi)?;
    }
    for &tj in &par.t[1..] {
        ctx.div_theta_p(&mut acc, t1 * tj)?;
    }
    ctx.mul_theta_p(&mut acc, t1 * a)?;
    ctx.div_theta_p(&mut acc, zi * zi)?;
    ctx.div_theta_p(&mut acc, a * zi)?;
    acc.mul_scalar(t1 / zi);
    acc.finish()
}

/// Both sides of the divided form of the C_n difference equation.
pub fn eqn_exp_cn_sides(
    z: &[Complex64],
    par: &CnParams,
    b: &BaseSet,
) -> Result<(Complex64, Complex64)> {
    let pol = TruncationPolicy::default();
    let p = b.p;
    let th =
        |x: Complex64| -> Result<Complex64> { theta_log(x, p, &pol)?.exp_value("theta", x) };
    let t = &par.t;
    let t1 = t[0];
    let a = par.a();
    let n = z.len();
    let mut lhs = one();
    for &zi in z {
        lhs *= th(t1 * zi)? * th(t1 / zi)? / (th(a * zi)? * th(a / zi)?);
    }
    for &tj in &t[1..] {
        lhs *= th(a / tj)? / th(t1 * tj)?;
    }
    lhs -= one();
    let mut pref = t1 * th(t1 * a)?;
    for &tj in &t[1..] {
        pref /= th(t1 * tj)?;
    }
    let mut rhs = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let zi = z[i];
        let mut term = one() / (zi * th(zi * zi)?);
        for (j, &zj) in z.iter().enumerate() {
            if j == i {
                continue;
            }
            term *= th(t1 * zj)? * th(t1 / zj)? / (th(zi * zj)? * th(zi / zj)?);
        }
        let mut inner_m = zi.powi(2 * n as i32 + 2) / th(a / zi)?;
        let mut inner_p = one() / th(a * zi)?;
        for &tj in t {
            inner_m *= th(tj / zi)?;
            inner_p *= th(tj * zi)?;
        }
        rhs += term * (inner_m - inner_p);
    }
    Ok((lhs, pref * rhs))
}

// ---------------------------------------------------------------------------
// A_n kernel, certificate, shift ratio and theta identities
// ---------------------------------------------------------------------------

/// Appends z_{n+1} = 1/(z_1...z_n).
fn an_coords(z: &[Complex64]) -> Vec<Complex64> {
    let mut all = z.to_vec();
    all.push(one() / prod(z));
    all
}

pub(crate) fn rho_an_acc(
    z: &[Complex64],
    par: &AnParams,
    ctx: &GammaCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    let all = an_coords(z);
    let ts = par.t_prod() * par.s_prod();
    let ss = par.s_prod();
    for (i, &zi) in all.iter().enumerate() {
        let zinv = one() / zi;
        for &tm in &par.t {
            ctx.mul_gam(acc, tm * zinv)?;
        }
        for &sj in &par.s {
            ctx.mul_gam(acc, sj * zi)?;
        }
        ctx.mul_gam(acc, ss * par.t[i])?;
        ctx.div_gam(acc, ts * zi)?;
        for &sj in &par.s {
            ctx.div_gam(acc, par.t[i] * sj)?;
        }
    }
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            ctx.div_gam(acc, all[i] / all[j])?;
            ctx.div_gam(acc, all[j] / all[i])?;
        }
    }
    Ok(())
}

pub(crate) fn an_param_acc(par: &AnParams, ctx: &GammaCtx, acc: &mut LogAcc) -> Result<()> {
    let ts = par.t_prod() * par.s_prod();
    let ss = par.s_prod();
    ctx.div_gam(acc, par.t_prod())?;
    for &sj in &par.s {
        ctx.mul_gam(acc, ts / sj)?;
        ctx.div_gam(acc, ss / sj)?;
    }
    Ok(())
}

/// The A_n kernel rho(z, t, s; A_n); z holds the n free coordinates.
pub fn rho_an(z: &[Complex64], par: &AnParams, b: &BaseSet) -> Result<Complex64> {
    if z.len() != par.n {
        return Err(Error::domain("rho_an needs n coordinates"));
    }
    let ctx = GammaCtx::from_bases(b)?;
    let mut acc = LogAcc::new();
    an_param_acc(par, &ctx, &mut acc)?;
    rho_an_acc(z, par, &ctx, &mut acc)?;
    acc.finish()
}

/// The A_n certificate g_i(z, t, s); `i` is 0-based among the n free
/// coordinates.
pub fn cert_g_an(i: usize, z: &[Complex64], par: &AnParams, b: &BaseSet) -> Result<Complex64> {
    if i >= z.len() || z.len() != par.n {
        return Err(Error::domain("cert_g_an index/coordinates out of range"));
    }
    let ctx = GammaCtx::from_bases(b)?;
    let mut acc = LogAcc::new();
    an_param_acc(par, &ctx, &mut acc)?;
    rho_an_acc(z, par, &ctx, &mut acc)?;
    let all = an_coords(z);
    let t1 = par.t[0];
    let tt = par.t_prod();
    let ts = tt * par.s_prod();
    let zi = all[i];
    for (j, &zj) in all.iter().enumerate() {
        if j == i {
            continue;
        }
        ctx.mul_theta_p(&mut acc, t1 / zj)?;
        ctx.div_theta_p(&mut acc, zi / zj)?;
    }
    for &sj in &par.s {
        ctx.mul_theta_p(&mut acc, zi * sj)?;
        ctx.div_theta_p(&mut acc, t1 * sj)?;
    }
    ctx.mul_theta_p(&mut acc, zi * tt / t1)?;
    ctx.mul_theta_p(&mut acc, ts * t1)?;
    ctx.div_theta_p(&mut acc, tt)?;
    ctx.div_theta_p(&mut acc, ts * zi)?;
    acc.mul_scalar(t1 / zi);
    acc.finish()
}

/// Both sides of the ratio identity for the coordinate shift
/// z_i -> q^-1 z_i of the A_n kernel (a pure theta-function relation).
pub fn an_shift_ratio_sides(
    i: usize,
    z: &[Complex64],
    par: &AnParams,
    b: &BaseSet,
) -> Result<(Complex64, Complex64)> {
    let mut zs = z.to_vec();
    zs[i] /= b.q;
    let lhs = {
        let ctx = GammaCtx::from_bases(b)?;
        let mut acc_n = LogAcc::new();
        rho_an_acc(&zs, par, &ctx, &mut acc_n)?;
        let mut acc_d = LogAcc::new();
        rho_an_acc(z, par, &ctx, &mut acc_d)?;
        match (acc_n.finish_log()?, acc_d.finish_log()?) {
            (LogVal::Finite(a), LogVal::Finite(bb)) => (a - bb).exp(),
            _ => return Err(Error::domain("shift ratio hit a zero of the kernel")),
        }
    };
    let pol = TruncationPolicy::default();
    let p = b.p;
    let q = b.q;
    let th =
        |x: Complex64| -> Result<Complex64> { theta_log(x, p, &pol)?.exp_value("theta", x) };
    let all = an_coords(z);
    let n = z.len();
    let zi = all[i];
    let zn1 = all[n];
    let ts = par.t_prod() * par.s_prod();
    let qi = one() / q;
    let mut rhs = one();
    for &sm in &par.s {
        rhs *= th(sm * zn1)? / th(qi * sm * zi)?;
    }
    for &tj in &par.t {
        rhs *= th(tj / zi)? / th(qi * tj / zn1)?;
    }
    rhs *= th(qi * ts * zi)? / th(ts * zn1)?;
    for (j, &zj) in z.iter().enumerate() {
        if j == i {
            continue;
        }
        rhs *= th(qi * zi / zj)? * th(qi * zj / zn1)? / (th(zj / zi)? * th(zn1 / zj)?);
    }
    rhs *= th(qi * qi * zi / zn1)? * zi * zi / (th(zi / zn1)? * q * zn1 * zn1);
    Ok((lhs, rhs))
}

/// Both sides of the divided form of the A_n difference equation.
pub fn eqn_exp_an_sides(
    z: &[Complex64],
    par: &AnParams,
    b: &BaseSet,
) -> Result<(Complex64, Complex64)> {
    let pol = TruncationPolicy::default();
    let (q, p) = (b.q, b.p);
    let th =
        |x: Complex64| -> Result<Complex64> { theta_log(x, p, &pol)?.exp_value("theta", x) };
    let all = an_coords(z);
    let n = z.len();
    let t1 = par.t[0];
    let tt = par.t_prod();
    let ss = par.s_prod();
    let ts = tt * ss;
    let zn1 = all[n];
    let mut lhs = th(t1 * ss)? / th(tt)?;
    for &zi in &all {
        lhs *= th(t1 / zi)? / th(ts * zi)?;
    }
    for &sj in &par.s {
        lhs *= th(ts / sj)? / th(t1 * sj)?;
    }
    lhs -= one();
    let mut pref = t1 * th(t1 * ts)? / th(tt)?;
    for &sj in &par.s {
        pref /= th(t1 * sj)?;
    }
    let qi = one() / q;
    let mut rhs = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let zi = all[i];
        let mut term = one() / (zi * th(zi / zn1)?);
        for (j, &zj) in z.iter().enumerate() {
            if j == i {
                continue;
            }
            term *= th(t1 / zj)? / th(zi / zj)?;
        }
        let mut big_m = (zi / zn1).powu(n as u32 + 1);
        for &sj in &par.s {
            big_m *= th(sj * zn1)?;
        }
        for &tj in &par.t {
            big_m *= th(tj / zi)?;
        }
        big_m *= th(qi * zi * tt / t1)?;
        for &tj in &par.t[1..] {
            big_m /= th(qi * tj / zn1)?;
        }
        big_m /= th(ts * zn1)?;
        for (j, &zj) in z.iter().enumerate() {
            if j == i {
                continue;
            }
            big_m *= th(qi * zj / zn1)? / th(zj / zn1)?;
        }
        let mut big_p = th(t1 / zn1)? * th(zi * tt / t1)? / th(ts * zi)?;
        for &sj in &par.s {
            big_p *= th(sj * zi)?;
        }
        rhs += term * (big_m - big_p);
    }
    Ok((lhs, pref * rhs))
}

/// Selector for the three theta-function identities behind the A_n residue
/// comparisons. Each holds on the subvariety the residue was taken at:
/// z_1...z_n = TS for the first, z_1...z_n = q / t_k for the second, and
/// z_1^2 z_2...z_n = 1 for the third. Samplers must place z there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaIdentity {
    AFunction,
    /// 1-based parameter index k in 2..=n+1.
    ZnPlusOneTj { k: usize },
    Z1ZnPlusOne,
}

/// Returns lhs - rhs of the selected identity (rhs is 0 for
/// `ZnPlusOneTj`). Shifts enter through q; theta uses base p.
pub fn theta_identity_residual(
    which: ThetaIdentity,
    z: &[Complex64],
    par: &AnParams,
    q: Complex64,
    p: Complex64,
) -> Result<Complex64> {
    let (lhs, rhs, _) = theta_identity_sides(which, z, par, q, p)?;
    Ok(lhs - rhs)
}

/// Both sides of the selected identity plus the cancellation scale
/// (the sum of term magnitudes), for scale-free residual normalization.
pub fn theta_identity_sides(
    which: ThetaIdentity,
    z: &[Complex64],
    par: &AnParams,
    q: Complex64,
    p: Complex64,
) -> Result<(Complex64, Complex64, f64)> {
    let pol = TruncationPolicy::default();
    let th =
        |x: Complex64| -> Result<Complex64> { theta_log(x, p, &pol)?.exp_value("theta", x) };
    let n = z.len();
    let t = &par.t;
    let tt = par.t_prod();
    let ts = tt * par.s_prod();
    let t1 = t[0];
    let qi = one() / q;
    match which {
        ThetaIdentity::AFunction => {
            let mut lhs = Complex64::new(0.0, 0.0);
            let mut scale = 0.0;
            for i in 0..n {
                let zi = z[i];
                let mut term = th(qi * zi * tt / t1)?;
                for (j, &zj) in z.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    term *= th(ts * zj * qi)? / th(zj / zi)?;
                }
                for &tj in &t[1..] {
                    term *= th(tj / zi)?;
                }
                lhs += term;
                scale += term.norm();
            }
            let mut rhs = th(one() / (t1 * par.s_prod()))?;
            for &tj in &t[1..] {
                rhs *= th(qi * tj * ts)?;
            }
            Ok((lhs, rhs, scale + rhs.norm()))
        }
        ThetaIdentity::ZnPlusOneTj { k } => {
            if !(2..=par.n + 1).contains(&k) {
                return Err(Error::domain("ZnPlusOneTj needs k in 2..=n+1"));
            }
            let mut lhs = Complex64::new(0.0, 0.0);
            let mut scale = 0.0;
            for i in 0..n {
                let zi = z[i];
                let mut term = th(q * t1 / (zi * tt))?;
                for (j, &tj) in t.iter().enumerate() {
                    // 1-based index runs 2..=n+1 excluding k.
                    if j == 0 || j + 1 == k {
                        continue;
                    }
                    term *= th(tj / zi)?;
                }
                for (j, &zj) in z.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    term /= th(zj / zi)?;
                }
                lhs += term;
                scale += term.norm();
            }
            Ok((lhs, Complex64::new(0.0, 0.0), scale))
        }
        ThetaIdentity::Z1ZnPlusOne => {
            let z1 = z[0];
            let mut lhs = Complex64::new(0.0, 0.0);
            let mut scale = 0.0;
            for i in 0..n {
                let zi = z[i];
                let mut term = th(zi * tt / (q * t1))?;
                for (j, &zj) in z.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    term *= th(zj / (q * z1))? / th(zj / zi)?;
                }
                for &tj in &t[1..] {
                    term *= th(tj / zi)? / th(tj / (q * z1))?;
                }
                lhs += term;
                scale += term.norm();
            }
            let rhs = th(z1 * tt / t1)?;
            Ok((lhs, rhs, scale + rhs.norm()))
        }
    }
}

// ---------------------------------------------------------------------------
// Symmetric A_n kernel
// ---------------------------------------------------------------------------

pub(crate) fn rho_an_sym_acc(
    z: &[Complex64],
    par: &AnSymParams,
    ctx: &GammaCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    let all = an_coords(z);
    for &zi in &all {
        let zinv = one() / zi;
        for m in 0..par.t.len() {
            ctx.mul_gam(acc, par.t[m] * zinv)?;
            ctx.mul_gam(acc, par.s[m] * zi)?;
        }
    }
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            ctx.div_gam(acc, all[i] / all[j])?;
            ctx.div_gam(acc, all[j] / all[i])?;
        }
    }
    Ok(())
}

/// The t <-> s symmetric A_n kernel (the integrand of the balanced
/// evaluation).
pub fn rho_an_sym(z: &[Complex64], par: &AnSymParams, b: &BaseSet) -> Result<Complex64> {
    if z.len() != par.n {
        return Err(Error::domain("rho_an_sym needs n coordinates"));
    }
    let ctx = GammaCtx::from_bases(b)?;
    let mut acc = LogAcc::new();
    rho_an_sym_acc(z, par, &ctx, &mut acc)?;
    acc.finish()
}

// ---------------------------------------------------------------------------
// D_n kernel
// ---------------------------------------------------------------------------

pub(crate) fn delta_dn_acc(
    z: &[Complex64],
    par: &DnParams,
    ctx: &GammaCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    let all = an_coords(z);
    let d = par.d_prod();
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            ctx.mul_gam(acc, d / (all[i] * all[j]))?;
            ctx.div_gam(acc, all[i] / all[j])?;
            ctx.div_gam(acc, all[j] / all[i])?;
        }
    }
    for &zi in &all {
        let zinv = one() / zi;
        for &tm in &par.t {
            ctx.mul_gam(acc, tm * zi)?;
            ctx.div_gam(acc, d * tm * zinv)?;
        }
        for &sj in &par.s {
            ctx.mul_gam(acc, sj * zinv)?;
        }
    }
    Ok(())
}

pub(crate) fn dn_param_acc(par: &DnParams, ctx: &GammaCtx, acc: &mut LogAcc) -> Result<()> {
    let d = par.d_prod();
    for &sj in &par.s {
        for &tm in &par.t {
            ctx.mul_gam(acc, d * tm / sj)?;
            ctx.div_gam(acc, tm * sj)?;
        }
    }
    for j in 0..par.s.len() {
        for k in (j + 1)..par.s.len() {
            ctx.div_gam(acc, d / (par.s[j] * par.s[k]))?;
        }
    }
    Ok(())
}

/// The D_n-type kernel Delta(z, t, s) at the family's own bases.
pub fn delta_dn(z: &[Complex64], par: &DnParams) -> Result<Complex64> {
    if z.len() != par.n {
        return Err(Error::domain("delta_dn needs n coordinates"));
    }
    let ctx = GammaCtx::new(par.r_tilde, par.p_tilde, &TruncationPolicy::default())?;
    let mut acc = LogAcc::new();
    dn_param_acc(par, &ctx, &mut acc)?;
    delta_dn_acc(z, par, &ctx, &mut acc)?;
    acc.finish()
}

// ---------------------------------------------------------------------------
// Modified (unit-circle) kernels
// ---------------------------------------------------------------------------

/// Modified kernels evaluate G through the modular representation: the
/// unit-circle hypotheses guarantee |r~|, |p~| < 1, which also covers
/// |q| = 1 triples where the product form diverges.
pub(crate) struct ModifiedCtx {
    gctx: GammaCtx,
    w: OmegaTriple,
}

impl ModifiedCtx {
    pub(crate) fn new(w: &OmegaTriple, pol: &TruncationPolicy) -> Result<Self> {
        let b = w.bases();
        if b.r_tilde.norm() >= 1.0 || b.p_tilde.norm() >= 1.0 {
            return Err(Error::domain("modified kernels need |r~| < 1 and |p~| < 1"));
        }
        Ok(ModifiedCtx {
            gctx: GammaCtx::new(b.r_tilde, b.p_tilde, pol)?,
            w: *w,
        })
    }

    /// G(x; omega) via exp(-pi i P(x)) Gamma(exp(-2 pi i x / w3); r~, p~).
    fn g_log(&self, x: Complex64) -> Result<LogVal> {
        let z = exp_2pi_i(-x / self.w.omega3);
        let shift = Complex64::new(0.0, -PI) * poly_p(x, &self.w);
        Ok(match self.gctx.lat.eval_log(z)? {
            LogVal::Finite(l) => LogVal::Finite(l + shift),
            other => other,
        })
    }

    fn mul_g(&self, acc: &mut LogAcc, x: Complex64) -> Result<()> {
        acc.mul(self.g_log(x)?, "modified_gamma_g", x);
        Ok(())
    }

    fn div_g(&self, acc: &mut LogAcc, x: Complex64) -> Result<()> {
        acc.div(self.g_log(x)?, "modified_gamma_g", x);
        Ok(())
    }
}

pub(crate) fn rho_modified_acc(
    u: &[Complex64],
    par: &ModifiedParams,
    ctx: &ModifiedCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    match par.family {
        ModifiedFamily::Cn => {
            let aa = par.g_sum();
            for &ui in u {
                for &gm in &par.g {
                    ctx.mul_g(acc, gm + ui)?;
                    ctx.mul_g(acc, gm - ui)?;
                }
                ctx.div_g(acc, 2.0 * ui)?;
                ctx.div_g(acc, -2.0 * ui)?;
                ctx.div_g(acc, aa + ui)?;
                ctx.div_g(acc, aa - ui)?;
            }
            for i in 0..u.len() {
                for j in (i + 1)..u.len() {
                    let (ui, uj) = (u[i], u[j]);
                    ctx.div_g(acc, ui + uj)?;
                    ctx.div_g(acc, ui - uj)?;
                    ctx.div_g(acc, uj - ui)?;
                    ctx.div_g(acc, -ui - uj)?;
                }
            }
        }
        ModifiedFamily::An => {
            let mut all = u.to_vec();
            all.push(-sum(u));
            let f = par.g_sum();
            let h = par.h_sum();
            for (i, &ui) in all.iter().enumerate() {
                for &gm in &par.g {
                    ctx.mul_g(acc, gm - ui)?;
                }
                for &hj in &par.h {
                    ctx.mul_g(acc, hj + ui)?;
                }
                ctx.mul_g(acc, h + par.g[i])?;
                ctx.div_g(acc, f + h + ui)?;
                for &hj in &par.h {
                    ctx.div_g(acc, par.g[i] + hj)?;
                }
            }
            for i in 0..all.len() {
                for j in (i + 1)..all.len() {
                    ctx.div_g(acc, all[i] - all[j])?;
                    ctx.div_g(acc, all[j] - all[i])?;
                }
            }
        }
        ModifiedFamily::Dn => {
            let mut all = u.to_vec();
            all.push(-sum(u));
            let f = par.g_sum();
            for i in 0..all.len() {
                for j in (i + 1)..all.len() {
                    ctx.mul_g(acc, f - all[i] - all[j])?;
                    ctx.div_g(acc, all[i] - all[j])?;
                    ctx.div_g(acc, all[j] - all[i])?;
                }
            }
            for &ui in &all {
                for &hm in &par.h {
                    ctx.mul_g(acc, hm + ui)?;
                    ctx.div_g(acc, f + hm - ui)?;
                }
                for &gj in &par.g {
                    ctx.mul_g(acc, gj - ui)?;
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn modified_param_acc(
    par: &ModifiedParams,
    ctx: &ModifiedCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    match par.family {
        ModifiedFamily::Cn => {
            let aa = par.g_sum();
            for &gm in &par.g {
                ctx.mul_g(acc, aa - gm)?;
            }
            for m in 0..par.g.len() {
                for s in (m + 1)..par.g.len() {
                    ctx.div_g(acc, par.g[m] + par.g[s])?;
                }
            }
        }
        ModifiedFamily::An => {
            let f = par.g_sum();
            let h = par.h_sum();
            ctx.div_g(acc, f)?;
            for &hj in &par.h {
                ctx.mul_g(acc, f + h - hj)?;
                ctx.div_g(acc, h - hj)?;
            }
        }
        ModifiedFamily::Dn => {
            let f = par.g_sum();
            for &gj in &par.g {
                for &hm in &par.h {
                    ctx.mul_g(acc, f + hm - gj)?;
                    ctx.div_g(acc, hm + gj)?;
                }
            }
            for j in 0..par.g.len() {
                for k in (j + 1)..par.g.len() {
                    ctx.div_g(acc, f - par.g[j] - par.g[k])?;
                }
            }
        }
    }
    Ok(())
}

/// The unit-circle kernel built from the modified elliptic gamma function.
pub fn rho_modified(u: &[Complex64], par: &ModifiedParams) -> Result<Complex64> {
    if u.len() != par.n {
        return Err(Error::domain("rho_modified needs n coordinates"));
    }
    let ctx = ModifiedCtx::new(&par.w, &TruncationPolicy::default())?;
    let mut acc = LogAcc::new();
    modified_param_acc(par, &ctx, &mut acc)?;
    rho_modified_acc(u, par, &ctx, &mut acc)?;
    acc.finish()
}

// ---------------------------------------------------------------------------
// q-reduced kernels and certificates
// ---------------------------------------------------------------------------

pub(crate) struct SineCtx {
    w1: Complex64,
    w2: Complex64,
    q: Complex64,
    q_tilde: Complex64,
    pol: TruncationPolicy,
}

impl SineCtx {
    pub(crate) fn new(w: &OmegaTriple, pol: &TruncationPolicy) -> Result<Self> {
        let tau = w.omega1 / w.omega2;
        if tau.im <= 0.0 {
            return Err(Error::domain("q-reduced kernels need Im(omega1/omega2) > 0"));
        }
        Ok(SineCtx {
            w1: w.omega1,
            w2: w.omega2,
            q: exp_2pi_i(tau),
            q_tilde: exp_2pi_i(-w.omega2 / w.omega1),
            pol: *pol,
        })
    }

    fn s_log(&self, x: Complex64) -> Result<LogVal> {
        let num = qpoch_log(exp_2pi_i(x / self.w2), self.q, &self.pol)?;
        let den = qpoch_log(
            exp_2pi_i(x / self.w1) * self.q_tilde,
            self.q_tilde,
            &self.pol,
        )?;
        let mut acc = LogAcc::new();
        acc.mul(num, "double_sine", x);
        acc.div(den, "double_sine", x);
        acc.finish_log()
    }

    fn mul_s(&self, acc: &mut LogAcc, x: Complex64) -> Result<()> {
        acc.mul(self.s_log(x)?, "double_sine", x);
        Ok(())
    }

    fn div_s(&self, acc: &mut LogAcc, x: Complex64) -> Result<()> {
        acc.div(self.s_log(x)?, "double_sine", x);
        Ok(())
    }
}

pub(crate) fn rho_qreduced_acc(
    u: &[Complex64],
    par: &QReducedParams,
    ctx: &SineCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    match par.family {
        ModifiedFamily::Cn => {
            let aa = par.g_sum();
            for i in 0..u.len() {
                for j in (i + 1)..u.len() {
                    let (ui, uj) = (u[i], u[j]);
                    ctx.mul_s(acc, ui + uj)?;
                    ctx.mul_s(acc, ui - uj)?;
                    ctx.mul_s(acc, uj - ui)?;
                    ctx.mul_s(acc, -ui - uj)?;
                }
            }
            for &ui in u {
                ctx.mul_s(acc, 2.0 * ui)?;
                ctx.mul_s(acc, -2.0 * ui)?;
                ctx.mul_s(acc, aa + ui)?;
                ctx.mul_s(acc, aa - ui)?;
                for &gm in &par.g {
                    ctx.div_s(acc, gm + ui)?;
                    ctx.div_s(acc, gm - ui)?;
                }
            }
        }
        ModifiedFamily::An => {
            let mut all = u.to_vec();
            all.push(-sum(u));
            let f = par.g_sum();
            let h = par.h_sum();
            for (i, &ui) in all.iter().enumerate() {
                ctx.mul_s(acc, f + h + ui)?;
                for &hj in &par.h {
                    ctx.mul_s(acc, par.g[i] + hj)?;
                }
                for &gm in &par.g {
                    ctx.div_s(acc, gm - ui)?;
                }
                for &hj in &par.h {
                    ctx.div_s(acc, hj + ui)?;
                }
                ctx.div_s(acc, h + par.g[i])?;
            }
            for i in 0..all.len() {
                for j in (i + 1)..all.len() {
                    ctx.mul_s(acc, all[i] - all[j])?;
                    ctx.mul_s(acc, all[j] - all[i])?;
                }
            }
        }
        ModifiedFamily::Dn => {
            let mut all = u.to_vec();
            all.push(-sum(u));
            let f = par.g_sum();
            for i in 0..all.len() {
                for j in (i + 1)..all.len() {
                    ctx.mul_s(acc, all[i] - all[j])?;
                    ctx.mul_s(acc, all[j] - all[i])?;
                    ctx.div_s(acc, f - all[i] - all[j])?;
                }
            }
            for &ui in &all {
                for &hm in &par.h {
                    ctx.mul_s(acc, f + hm - ui)?;
                    ctx.div_s(acc, hm + ui)?;
                }
                for &gj in &par.g {
                    ctx.div_s(acc, gj - ui)?;
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn qreduced_param_acc(
    par: &QReducedParams,
    ctx: &SineCtx,
    acc: &mut LogAcc,
) -> Result<()> {
    match par.family {
        ModifiedFamily::Cn => {
            let aa = par.g_sum();
            for m in 0..par.g.len() {
                for s in (m + 1)..par.g.len() {
                    ctx.mul_s(acc, par.g[m] + par.g[s])?;
                }
            }
            for &gm in &par.g {
                ctx.div_s(acc, aa - gm)?;
            }
        }
        ModifiedFamily::An => {
            let f = par.g_sum();
            let h = par.h_sum();
            ctx.mul_s(acc, f)?;
            for &hj in &par.h {
                ctx.mul_s(acc, h - hj)?;
                ctx.div_s(acc, f + h - hj)?;
            }
        }
        ModifiedFamily::Dn => {
            let f = par.g_sum();
            for &gj in &par.g {
                for &hm in &par.h {
                    ctx.mul_s(acc, hm + gj)?;
                    ctx.div_s(acc, f + hm - gj)?;
                }
            }
            for j in 0..par.g.len() {
                for k in (j + 1)..par.g.len() {
                    ctx.mul_s(acc, f - par.g[j] - par.g[k])?;
                }
            }
        }
    }
    Ok(())
}

/// The q-reduced kernel built from the double sine function.
pub fn rho_qreduced(u: &[Complex64], par: &QReducedParams) -> Result<Complex64> {
    if u.len() != par.n {
        return Err(Error::domain("rho_qreduced needs n coordinates"));
    }
    let ctx = SineCtx::new(&par.w, &TruncationPolicy::default())?;
    let mut acc = LogAcc::new();
    qreduced_param_acc(par, &ctx, &mut acc)?;
    rho_qreduced_acc(u, par, &ctx, &mut acc)?;
    acc.finish()
}

/// The q-reduced certificate f_i(u, ...); `i` is 0-based. Implements the
/// C_n and A_n displays (no closed form is given for the D_n family).
pub fn cert_f_qreduced(i: usize, u: &[Complex64], par: &QReducedParams) -> Result<Complex64> {
    if i >= u.len() || u.len() != par.n {
        return Err(Error::domain("cert_f_qreduced index/coordinates out of range"));
    }
    let ctx = SineCtx::new(&par.w, &TruncationPolicy::default())?;
    let mut acc = LogAcc::new();
    qreduced_param_acc(par, &ctx, &mut acc)?;
    rho_qreduced_acc(u, par, &ctx, &mut acc)?;
    let w2 = par.w.omega2;
    let e = |x: Complex64| exp_2pi_i(x / w2);
    match par.family {
        ModifiedFamily::Cn => {
            let z: Vec<Complex64> = u.iter().map(|&x| e(x)).collect();
            let t: Vec<Complex64> = par.g.iter().map(|&x| e(x)).collect();
            let a = e(par.g_sum());
            let zi = z[i];
            let mut fac = one();
            for (j, &zj) in z.iter().enumerate() {
                if j == i {
                    continue;
                }
                fac *= (one() - t[0] * zj) * (one() - t[0] / zj)
                    / ((one() - zi * zj) * (one() - zi / zj));
            }
            for &tj in &t {
                fac *= one() - tj * zi;
            }
            for &tj in &t[1..] {
                fac /= one() - t[0] * tj;
            }
            fac *= (one() - t[0] * a) * t[0] / ((one() - zi * zi) * (one() - a * zi) * zi);
            if !fac.is_finite() {
                return Err(Error::domain("certificate factor hit a pole"));
            }
            acc.mul_scalar(fac);
            acc.finish()
        }
        ModifiedFamily::An => {
            let mut all = u.to_vec();
            all.push(-sum(u));
            let z: Vec<Complex64> = all.iter().map(|&x| e(x)).collect();
            let t: Vec<Complex64> = par.g.iter().map(|&x| e(x)).collect();
            let s: Vec<Complex64> = par.h.iter().map(|&x| e(x)).collect();
            let tt = e(par.g_sum());
            let ts = e(par.g_sum() + par.h_sum());
            let zi = z[i];
            let mut fac = one();
            for (j, &zj) in z.iter().enumerate() {
                if j == i {
                    continue;
                }
                fac *= (one() - t[0] / zj) / (one() - zi / zj);
            }
            for &sj in &s {
                fac *= (one() - zi * sj) / (one() - t[0] * sj);
            }
            fac *= (one() - zi * tt / t[0]) * (one() - ts * t[0]) * t[0]
                / ((one() - tt) * (one() - ts * zi) * zi);
            if !fac.is_finite() {
                return Err(Error::domain("certificate factor hit a pole"));
            }
            acc.mul_scalar(fac);
            acc.finish()
        }
        ModifiedFamily::Dn => Err(Error::domain(
            "no closed-form certificate for the q-reduced D_n family",
        )),
    }
}

// ---------------------------------------------------------------------------
// Change-of-variables helpers
// ---------------------------------------------------------------------------

/// exp(-pi i n P(0)): the prefactor relating the modified kernels to their
/// torus counterparts under z_j = exp(-2 pi i u_j / omega3).
pub fn change_of_vars_prefactor(n: usize, w: &OmegaTriple) -> Complex64 {
    (Complex64::new(0.0, -PI) * (n as f64) * poly_p(Complex64::new(0.0, 0.0), w)).exp()
}

/// Maps a segment point u to the torus coordinate exp(-2 pi i u / omega3).
pub fn segment_to_torus(u: Complex64, w: &OmegaTriple) -> Complex64 {
    exp_2pi_i(-u / w.omega3)
}

/// The scale factor (omega3 / (2 pi i omega2))^n carried by
/// du_j/omega2 = (omega3/(2 pi i omega2)) dz_j/z_j per coordinate.
pub fn segment_measure_factor(n: usize, w: &OmegaTriple) -> Complex64 {
    let f = w.omega3 / (Complex64::new(0.0, TWO_PI) * w.omega2);
    f.powu(n as u32)
}
