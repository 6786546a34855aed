//! Base special functions: q-Pochhammer products, the theta function,
//! the elliptic gamma function, the modified elliptic gamma function,
//! the double sine function and the kappa constant, plus the
//! omega-triple parametrization of the six bases.
//!
//! All infinite products are evaluated as exponentials of accumulated
//! logarithms. Partial products are kept in value space and folded into
//! a running logarithm whenever they leave a safe magnitude window, so
//! no branch unwinding is needed and arguments of very large modulus
//! (which occur in the double-sine asymptotics) cannot overflow.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
pub(crate) const PI: f64 = std::f64::consts::PI;

/// Factor-magnitude threshold: a product factor smaller than this is
/// treated as an exact zero of that factor. In a numerator this makes the
/// product zero; in a denominator it raises a pole error. Values closer
/// than this would poison quadrature silently.
pub(crate) const FACTOR_EPS: f64 = 1e-13;

/// Threshold on `||q| - 1|` below which the Auto path of the modified
/// elliptic gamma function switches to the modular representation.
pub(crate) const UNIT_CIRCLE_EPS: f64 = 1e-12;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// exp(2*pi*i*z)
pub(crate) fn exp_2pi_i(z: Complex64) -> Complex64 {
    (Complex64::new(0.0, TWO_PI) * z).exp()
}

// ---------------------------------------------------------------------------
// Parametrization types
// ---------------------------------------------------------------------------

/// Convergence regime of a base set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// |q| < 1 and |p| < 1: the standard elliptic gamma function converges.
    AllInside,
    /// |q| = 1 (within 1e-14) with |p~| < 1 and |r~| < 1: only the modular
    /// representation of the modified elliptic gamma function is available.
    UnitCircleQ,
}

/// The three quasi-periods omega1, omega2, omega3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaTriple {
    #[serde(with = "crate::wire::cpx")]
    pub omega1: Complex64,
    #[serde(with = "crate::wire::cpx")]
    pub omega2: Complex64,
    #[serde(with = "crate::wire::cpx")]
    pub omega3: Complex64,
}

impl OmegaTriple {
    pub fn new(omega1: Complex64, omega2: Complex64, omega3: Complex64) -> Result<Self> {
        if omega1.norm() == 0.0 || omega2.norm() == 0.0 || omega3.norm() == 0.0 {
            return Err(Error::domain("omega triple components must be nonzero"));
        }
        Ok(OmegaTriple {
            omega1,
            omega2,
            omega3,
        })
    }

    pub fn sum(&self) -> Complex64 {
        self.omega1 + self.omega2 + self.omega3
    }

    /// The triple with omega1 and omega2 exchanged.
    pub fn swap12(&self) -> Self {
        OmegaTriple {
            omega1: self.omega2,
            omega2: self.omega1,
            omega3: self.omega3,
        }
    }

    /// Derives the six bases q, p, r, q~, p~, r~.
    pub fn bases(&self) -> BaseSet {
        let q = exp_2pi_i(self.omega1 / self.omega2);
        let p = exp_2pi_i(self.omega3 / self.omega2);
        let r = exp_2pi_i(self.omega3 / self.omega1);
        let q_tilde = exp_2pi_i(-self.omega2 / self.omega1);
        let p_tilde = exp_2pi_i(-self.omega2 / self.omega3);
        let r_tilde = exp_2pi_i(-self.omega1 / self.omega3);
        let regime = BaseSet::classify(q, p, p_tilde, r_tilde);
        BaseSet {
            q,
            p,
            r,
            q_tilde,
            p_tilde,
            r_tilde,
            regime,
        }
    }
}

/// The six derived bases together with the detected regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseSet {
    #[serde(with = "crate::wire::cpx")]
    pub q: Complex64,
    #[serde(with = "crate::wire::cpx")]
    pub p: Complex64,
    #[serde(with = "crate::wire::cpx")]
    pub r: Complex64,
    #[serde(with = "crate::wire::cpx")]
    pub q_tilde: Complex64,
    #[serde(with = "crate::wire::cpx")]
    pub p_tilde: Complex64,
    #[serde(with = "crate::wire::cpx")]
    pub r_tilde: Complex64,
    /// `None` when the bases fit neither convergence regime.
    pub regime: Option<Regime>,
}

impl BaseSet {
    fn classify(
        q: Complex64,
        p: Complex64,
        p_tilde: Complex64,
        r_tilde: Complex64,
    ) -> Option<Regime> {
        if (q.norm() - 1.0).abs() <= 1e-14 {
            if p_tilde.norm() < 1.0 && r_tilde.norm() < 1.0 {
                return Some(Regime::UnitCircleQ);
            }
            return None;
        }
        if q.norm() < 1.0 && p.norm() < 1.0 {
            return Some(Regime::AllInside);
        }
        None
    }

    /// Builds a full base set from bare (q, p) inside the unit disk by
    /// choosing the canonical triple omega2 = 1, omega1 = log q / (2 pi i),
    /// omega3 = log p / (2 pi i).
    pub fn from_qp(q: Complex64, p: Complex64) -> Result<Self> {
        if q.norm() >= 1.0 || p.norm() >= 1.0 || q.norm() == 0.0 || p.norm() == 0.0 {
            return Err(Error::domain(
                "from_qp requires 0 < |q| < 1 and 0 < |p| < 1",
            ));
        }
        let two_pi_i = Complex64::new(0.0, TWO_PI);
        let w = OmegaTriple::new(q.ln() / two_pi_i, one(), p.ln() / two_pi_i)?;
        let mut b = w.bases();
        // Use the exact inputs for the two primary bases.
        b.q = q;
        b.p = p;
        b.regime = BaseSet::classify(b.q, b.p, b.p_tilde, b.r_tilde);
        Ok(b)
    }
}

/// Controls the truncation of infinite products.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Target absolute tolerance of the log-product tail.
    pub eps: f64,
    /// Hard cap on the number of factors per product index.
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            eps: 1e-15,
            max_terms: 8192,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1e-6) {
            return Err(Error::domain("truncation eps must satisfy 0 < eps < 1e-6"));
        }
        if self.max_terms < 8 {
            return Err(Error::domain("max_terms must be at least 8"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Log-space product machinery
// ---------------------------------------------------------------------------

/// Outcome of a log-space product evaluation: a finite logarithm, an exact
/// zero (a numerator factor vanished at lattice index (j,k)), or a pole
/// (a denominator factor vanished).
#[derive(Debug, Clone, Copy)]
pub(crate) enum LogVal {
    Finite(Complex64),
    Zero { j: usize, k: usize },
    Pole { j: usize, k: usize },
}

impl LogVal {
    pub(crate) fn exp_value(
        self,
        what: &'static str,
        arg: Complex64,
    ) -> Result<Complex64> {
        match self {
            LogVal::Finite(l) => Ok(l.exp()),
            LogVal::Zero { .. } => Ok(Complex64::new(0.0, 0.0)),
            LogVal::Pole { j, k } => Err(Error::Pole { what, j, k, arg }),
        }
    }
}

/// Accumulates a product of log-space values with signed infinity counting,
/// so that compositions like 1/(Gamma(z^2) Gamma(z^-2)) — where two poles in
/// a denominator make a genuine zero — resolve without special cases.
#[derive(Debug, Clone)]
pub(crate) struct LogAcc {
    log: Complex64,
    zeros: u32,
    poles: u32,
    first_hit: Option<(&'static str, usize, usize, Complex64)>,
}

impl LogAcc {
    pub(crate) fn new() -> Self {
        LogAcc {
            log: Complex64::new(0.0, 0.0),
            zeros: 0,
            poles: 0,
            first_hit: None,
        }
    }

    fn record_hit(&mut self, what: &'static str, j: usize, k: usize, arg: Complex64) {
        if self.first_hit.is_none() {
            self.first_hit = Some((what, j, k, arg));
        }
    }

    /// Multiply by a log-space factor (numerator position).
    pub(crate) fn mul(&mut self, v: LogVal, what: &'static str, arg: Complex64) {
        match v {
            LogVal::Finite(l) => self.log += l,
            LogVal::Zero { j, k } => {
                self.zeros += 1;
                self.record_hit(what, j, k, arg);
            }
            LogVal::Pole { j, k } => {
                self.poles += 1;
                self.record_hit(what, j, k, arg);
            }
        }
    }

    /// Divide by a log-space factor (denominator position).
    pub(crate) fn div(&mut self, v: LogVal, what: &'static str, arg: Complex64) {
        match v {
            LogVal::Finite(l) => self.log -= l,
            LogVal::Zero { j, k } => {
                self.poles += 1;
                self.record_hit(what, j, k, arg);
            }
            LogVal::Pole { j, k } => {
                self.zeros += 1;
                self.record_hit(what, j, k, arg);
            }
        }
    }

    /// Multiply by an ordinary nonzero complex scalar.
    pub(crate) fn mul_scalar(&mut self, c: Complex64) {
        self.log += c.ln();
    }

    pub(crate) fn finish_log(self) -> Result<LogVal> {
        let (what, j, k, arg) = self
            .first_hit
            .unwrap_or(("", 0, 0, Complex64::new(0.0, 0.0)));
        if self.poles > self.zeros {
            Err(Error::Pole { what, j, k, arg })
        } else if self.zeros > self.poles {
            Ok(LogVal::Zero { j, k })
        } else if self.zeros > 0 {
            // As many vanishing numerator as denominator factors: the limit
            // is finite but not recoverable from factor values.
            Err(Error::Pole { what, j, k, arg })
        } else {
            Ok(LogVal::Finite(self.log))
        }
    }

    pub(crate) fn finish(self) -> Result<Complex64> {
        match self.finish_log()? {
            LogVal::Finite(l) => Ok(l.exp()),
            LogVal::Zero { .. } => Ok(Complex64::new(0.0, 0.0)),
            LogVal::Pole { .. } => unreachable!(),
        }
    }
}

// ---------------------------------------------------------------------------
// q-Pochhammer and theta
// ---------------------------------------------------------------------------

/// Log of the infinite product prod_{j>=0} (1 - a b^j).
pub(crate) fn qpoch_log(
    a: Complex64,
    b: Complex64,
    pol: &TruncationPolicy,
) -> Result<LogVal> {
    let bn = b.norm();
    if bn >= 1.0 {
        return Err(Error::domain(format!("qpoch base |b| = {bn} must be < 1")));
    }
    let an = a.norm();
    if an == 0.0 {
        return Ok(LogVal::Finite(Complex64::new(0.0, 0.0)));
    }
    let depth = if bn == 0.0 {
        1
    } else {
        let lhs = pol.eps * (1.0 - bn) / an;
        if lhs >= 1.0 {
            0
        } else {
            (lhs.ln() / bn.ln()).ceil() as usize + 1
        }
    };
    if depth > pol.max_terms {
        return Err(Error::Truncation {
            needed: depth,
            max_terms: pol.max_terms,
        });
    }
    let mut acc = one();
    let mut log_extra = Complex64::new(0.0, 0.0);
    let mut abj = a;
    for j in 0..depth {
        let f = one() - abj;
        if f.norm() < FACTOR_EPS {
            return Ok(LogVal::Zero { j, k: 0 });
        }
        acc *= f;
        let m = acc.norm_sqr();
        if !(1e-280..=1e280).contains(&m) {
            log_extra += acc.ln();
            acc = one();
        }
        abj *= b;
    }
    Ok(LogVal::Finite(log_extra + acc.ln()))
}

/// The infinite product (a; b)_inf = prod_{j>=0} (1 - a b^j), |b| < 1.
///
/// Returns exact zero when a factor vanishes (a = b^-j within 1e-13 of the
/// factor magnitude).
pub fn qpoch_inf(a: Complex64, b: Complex64, pol: &TruncationPolicy) -> Result<Complex64> {
    qpoch_log(a, b, pol)?.exp_value("qpoch", a)
}

pub(crate) fn theta_log(z: Complex64, p: Complex64, pol: &TruncationPolicy) -> Result<LogVal> {
    if z.norm() == 0.0 {
        return Err(Error::domain("theta argument must be nonzero"));
    }
    if p.norm() >= 1.0 {
        return Err(Error::domain("theta base |p| must be < 1"));
    }
    let a = qpoch_log(z, p, pol)?;
    let b = qpoch_log(p / z, p, pol)?;
    let mut acc = LogAcc::new();
    acc.mul(a, "theta", z);
    acc.mul(b, "theta", z);
    acc.finish_log()
}

/// theta(z; p) = (z; p)_inf (p/z; p)_inf.
pub fn theta(z: Complex64, p: Complex64) -> Result<Complex64> {
    let pol = TruncationPolicy::default();
    theta_log(z, p, &pol)?.exp_value("theta", z)
}

// ---------------------------------------------------------------------------
// Elliptic gamma function
// ---------------------------------------------------------------------------

/// Precomputed double-product lattice for a fixed base pair (q, p):
/// the triangular set of (q^j p^k, q^{j+1} p^{k+1}) pairs whose
/// contribution to the log product exceeds the truncation cutoff for
/// arguments of modulus up to `mx`.
#[derive(Debug, Clone)]
pub(crate) struct GammaLattice {
    terms: Vec<(Complex64, Complex64, u32, u32)>,
}

impl GammaLattice {
    /// `mx` is an upper bound on max(|z|, |qp/z|) over intended arguments.
    pub(crate) fn new(
        q: Complex64,
        p: Complex64,
        pol: &TruncationPolicy,
        mx: f64,
    ) -> Result<Self> {
        let qn = q.norm();
        let pn = p.norm();
        if qn >= 1.0 || pn >= 1.0 {
            return Err(Error::domain(format!(
                "elliptic gamma bases must satisfy |q| < 1, |p| < 1 (got {qn}, {pn})"
            )));
        }
        let mx = mx.max(1.0);
        // Per-term cutoff: dropping all (j,k) with |q^j p^k| < tau leaves a
        // log tail below eps (see the geometric tail bound in qpoch_log,
        // applied per row and summed over at most max_terms rows).
        let tau = pol.eps * (1.0 - pn) * (1.0 - qn) / (16.0 * mx);
        let mut terms = Vec::new();
        let mut wj = one();
        let qp = q * p;
        let mut j = 0u32;
        loop {
            if wj.norm() < tau || j as usize > pol.max_terms {
                break;
            }
            let mut w = wj;
            let mut k = 0u32;
            while w.norm() >= tau && (k as usize) <= pol.max_terms {
                terms.push((w, w * qp, j, k));
                w *= p;
                k += 1;
            }
            wj *= q;
            j += 1;
        }
        if j as usize > pol.max_terms {
            return Err(Error::Truncation {
                needed: j as usize,
                max_terms: pol.max_terms,
            });
        }
        Ok(GammaLattice { terms })
    }

    /// Log of Gamma(x; q, p) = prod (1 - x^-1 q^{j+1} p^{k+1}) / (1 - x q^j p^k).
    pub(crate) fn eval_log(&self, x: Complex64) -> Result<LogVal> {
        if x.norm() == 0.0 {
            return Err(Error::domain("elliptic gamma argument must be nonzero"));
        }
        let inv = one() / x;
        let mut num = one();
        let mut den = one();
        let mut extra = Complex64::new(0.0, 0.0);
        for &(w, pqw, j, k) in &self.terms {
            let fd = one() - x * w;
            if fd.norm() < FACTOR_EPS {
                return Ok(LogVal::Pole {
                    j: j as usize,
                    k: k as usize,
                });
            }
            let fnum = one() - pqw * inv;
            if fnum.norm() < FACTOR_EPS {
                return Ok(LogVal::Zero {
                    j: (j + 1) as usize,
                    k: (k + 1) as usize,
                });
            }
            num *= fnum;
            den *= fd;
            let nn = num.norm_sqr();
            let dd = den.norm_sqr();
            if !(1e-280..=1e280).contains(&nn) || !(1e-280..=1e280).contains(&dd) {
                extra += num.ln() - den.ln();
                num = one();
                den = one();
            }
        }
        Ok(LogVal::Finite(extra + num.ln() - den.ln()))
    }
}

pub(crate) fn elliptic_gamma_log(
    z: Complex64,
    q: Complex64,
    p: Complex64,
    pol: &TruncationPolicy,
) -> Result<LogVal> {
    let mx = z.norm().max((q * p / z).norm());
    let lat = GammaLattice::new(q, p, pol, mx)?;
    lat.eval_log(z)
}

/// The elliptic gamma function Gamma(z; q, p), |q| < 1, |p| < 1.
///
/// Evaluated as a truncated double product accumulated in log space.
/// A vanishing denominator factor (z within 1e-13 of the pole lattice
/// q^-j p^-k) raises a pole error carrying the offending (j, k); a
/// vanishing numerator factor returns exact zero.
pub fn elliptic_gamma(z: Complex64, q: Complex64, p: Complex64) -> Result<Complex64> {
    let pol = TruncationPolicy::default();
    elliptic_gamma_log(z, q, p, &pol)?.exp_value("elliptic_gamma", z)
}

// ---------------------------------------------------------------------------
// B_{2,2}, P(u)
// ---------------------------------------------------------------------------

/// The second Bernoulli-type polynomial
/// B_{2,2}(u; omega) = u^2/(w1 w2) - u/w1 - u/w2 + w1/(6 w2) + w2/(6 w1) + 1/2.
pub fn b22(u: Complex64, w: &OmegaTriple) -> Complex64 {
    let (w1, w2) = (w.omega1, w.omega2);
    u * u / (w1 * w2) - u / w1 - u / w2 + w1 / (6.0 * w2) + w2 / (6.0 * w1)
        + Complex64::new(0.5, 0.0)
}

/// The third-degree polynomial P(u) with
/// P(v + (w1+w2+w3)/2) = v (v^2 - (w1^2+w2^2+w3^2)/4) / (3 w1 w2 w3).
pub fn poly_p(u: Complex64, w: &OmegaTriple) -> Complex64 {
    let half_sum = w.sum() / 2.0;
    let v = u - half_sum;
    let sq = w.omega1 * w.omega1 + w.omega2 * w.omega2 + w.omega3 * w.omega3;
    v * (v * v - sq / 4.0) / (3.0 * w.omega1 * w.omega2 * w.omega3)
}

// ---------------------------------------------------------------------------
// Modified elliptic gamma function
// ---------------------------------------------------------------------------

/// Evaluation path for the modified elliptic gamma function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaGPath {
    /// Modular when |q| is within 1e-12 of the unit circle, else Product.
    Auto,
    /// The double product over bases (q, p) and (q~, r); needs all of
    /// |q|, |p|, |r|, |q~| inside the unit disk.
    Product,
    /// exp(-pi i P(u)) Gamma(exp(-2 pi i u / w3); r~, p~); needs |r~|, |p~| < 1.
    Modular,
}

pub(crate) fn modified_gamma_g_log(
    u: Complex64,
    w: &OmegaTriple,
    path: GammaGPath,
    pol: &TruncationPolicy,
) -> Result<LogVal> {
    let b = w.bases();
    let path = match path {
        GammaGPath::Auto => {
            if (b.q.norm() - 1.0).abs() <= UNIT_CIRCLE_EPS {
                GammaGPath::Modular
            } else {
                GammaGPath::Product
            }
        }
        other => other,
    };
    match path {
        GammaGPath::Product => {
            if b.q.norm() >= 1.0 || b.p.norm() >= 1.0 || b.r.norm() >= 1.0
                || b.q_tilde.norm() >= 1.0
            {
                return Err(Error::domain(
                    "product path needs |q|, |p|, |r|, |q~| < 1",
                ));
            }
            // Regrouping of the defining double product:
            //   G(u) = Gamma(e^{2 pi i u/w2}; q, p) * Gamma(e^{-2 pi i u/w1} r; q~, r).
            let z1 = exp_2pi_i(u / w.omega2);
            let z2 = exp_2pi_i(-u / w.omega1) * b.r;
            let g1 = elliptic_gamma_log(z1, b.q, b.p, pol)?;
            let g2 = elliptic_gamma_log(z2, b.q_tilde, b.r, pol)?;
            let mut acc = LogAcc::new();
            acc.mul(g1, "modified_gamma_g", z1);
            acc.mul(g2, "modified_gamma_g", z2);
            acc.finish_log()
        }
        GammaGPath::Modular => {
            if b.r_tilde.norm() >= 1.0 || b.p_tilde.norm() >= 1.0 {
                return Err(Error::domain("modular path needs |r~|, |p~| < 1"));
            }
            let z = exp_2pi_i(-u / w.omega3);
            let shift = Complex64::new(0.0, -PI) * poly_p(u, w);
            match elliptic_gamma_log(z, b.r_tilde, b.p_tilde, pol)? {
                LogVal::Finite(l) => Ok(LogVal::Finite(l + shift)),
                other => Ok(other),
            }
        }
        GammaGPath::Auto => unreachable!(),
    }
}

/// The modified elliptic gamma function G(u; omega).
pub fn modified_gamma_g(
    u: Complex64,
    w: &OmegaTriple,
    path: GammaGPath,
) -> Result<Complex64> {
    let pol = TruncationPolicy::default();
    modified_gamma_g_log(u, w, path, &pol)?.exp_value("modified_gamma_g", u)
}

// ---------------------------------------------------------------------------
// Double sine
// ---------------------------------------------------------------------------

pub(crate) fn double_sine_log(
    u: Complex64,
    w: &OmegaTriple,
    pol: &TruncationPolicy,
) -> Result<LogVal> {
    let tau = w.omega1 / w.omega2;
    if tau.im <= 0.0 {
        return Err(Error::domain(
            "double sine needs Im(omega1/omega2) > 0 so that |q| < 1",
        ));
    }
    let q = exp_2pi_i(tau);
    let q_tilde = exp_2pi_i(-w.omega2 / w.omega1);
    let num = qpoch_log(exp_2pi_i(u / w.omega2), q, pol)?;
    let den = qpoch_log(exp_2pi_i(u / w.omega1) * q_tilde, q_tilde, pol)?;
    let mut acc = LogAcc::new();
    acc.mul(num, "double_sine", u);
    acc.div(den, "double_sine", u);
    acc.finish_log()
}

/// The double sine function
/// S(u; omega) = (e^{2 pi i u/w2}; q)_inf / (e^{2 pi i u/w1} q~; q~)_inf,
/// defined here for Im(omega1/omega2) > 0.
pub fn double_sine(u: Complex64, w: &OmegaTriple) -> Result<Complex64> {
    let pol = TruncationPolicy::default();
    double_sine_log(u, w, &pol)?.exp_value("double_sine", u)
}

/// Log of S(u) reduced nowhere: the raw accumulated logarithm. Useful for
/// asymptotic checks where S itself would overflow.
pub fn double_sine_ln(u: Complex64, w: &OmegaTriple) -> Result<Complex64> {
    let pol = TruncationPolicy::default();
    match double_sine_log(u, w, &pol)? {
        LogVal::Finite(l) => Ok(l),
        LogVal::Zero { j, k } | LogVal::Pole { j, k } => Err(Error::Pole {
            what: "double_sine_ln",
            j,
            k,
            arg: u,
        }),
    }
}

// ---------------------------------------------------------------------------
// kappa
// ---------------------------------------------------------------------------

/// Evaluation path for the kappa constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaPath {
    /// -(q~; q~)_inf / ((q; q)_inf (p; p)_inf (r; r)_inf); needs those four
    /// bases inside the unit disk.
    EtaProducts,
    /// w3 exp(pi i/12 (sum w)(sum 1/w)) / (w2 (r~; r~)_inf (p~; p~)_inf);
    /// needs |r~|, |p~| < 1. Well defined on |q| = 1.
    OmegaForm,
}

/// The constant kappa appearing in all unit-circle evaluations.
pub fn kappa(w: &OmegaTriple, path: KappaPath) -> Result<Complex64> {
    let pol = TruncationPolicy::default();
    let b = w.bases();
    match path {
        KappaPath::EtaProducts => {
            if b.q.norm() >= 1.0 || b.p.norm() >= 1.0 || b.r.norm() >= 1.0
                || b.q_tilde.norm() >= 1.0
            {
                return Err(Error::domain(
                    "eta-products path needs |q|, |p|, |r|, |q~| < 1",
                ));
            }
            let num = qpoch_inf(b.q_tilde, b.q_tilde, &pol)?;
            let den = qpoch_inf(b.q, b.q, &pol)?
                * qpoch_inf(b.p, b.p, &pol)?
                * qpoch_inf(b.r, b.r, &pol)?;
            Ok(-num / den)
        }
        KappaPath::OmegaForm => {
            if b.r_tilde.norm() >= 1.0 || b.p_tilde.norm() >= 1.0 {
                return Err(Error::domain("omega-form path needs |r~|, |p~| < 1"));
            }
            let sum_w = w.sum();
            let sum_inv = 1.0 / w.omega1 + 1.0 / w.omega2 + 1.0 / w.omega3;
            let phase = (Complex64::new(0.0, PI / 12.0) * sum_w * sum_inv).exp();
            let den = qpoch_inf(b.r_tilde, b.r_tilde, &pol)?
                * qpoch_inf(b.p_tilde, b.p_tilde, &pol)?;
            Ok(w.omega3 * phase / (w.omega2 * den))
        }
    }
}

/// kappa via the path admissible for the given triple: the omega form when
/// |q| is on the unit circle, the eta-product form otherwise.
pub fn kappa_auto(w: &OmegaTriple) -> Result<Complex64> {
    let b = w.bases();
    if (b.q.norm() - 1.0).abs() <= UNIT_CIRCLE_EPS {
        kappa(w, KappaPath::OmegaForm)
    } else {
        kappa(w, KappaPath::EtaProducts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        let scale = 1.0 + a.norm().max(b.norm());
        assert!(
            (a - b).norm() / scale < tol,
            "got {a}, expected {b} (tol {tol})"
        );
    }

    #[test]
    fn qpoch_single_factor_when_base_zero() {
        let pol = TruncationPolicy::default();
        let v = qpoch_inf(c(0.3, 0.0), c(0.0, 0.0), &pol).unwrap();
        assert_close(v, c(0.7, 0.0), 1e-15);
    }

    #[test]
    fn qpoch_trivial_one_when_a_zero() {
        let pol = TruncationPolicy::default();
        let v = qpoch_inf(c(0.0, 0.0), c(0.5, 0.0), &pol).unwrap();
        assert_close(v, c(1.0, 0.0), 1e-15);
    }

    #[test]
    fn qpoch_rejects_base_outside_disk() {
        let pol = TruncationPolicy::default();
        assert!(matches!(
            qpoch_inf(c(0.3, 0.0), c(1.0, 0.0), &pol),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn qpoch_truncation_budget() {
        let pol = TruncationPolicy {
            eps: 1e-15,
            max_terms: 8,
        };
        assert!(matches!(
            qpoch_inf(c(0.5, 0.0), c(0.99, 0.0), &pol),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn qpoch_exact_zero_on_vanishing_factor() {
        let pol = TruncationPolicy::default();
        // a = b^{-2} makes the j = 2 factor vanish.
        let b = c(0.4, 0.3);
        let a = 1.0 / (b * b);
        let v = qpoch_inf(a, b, &pol).unwrap();
        assert_eq!(v, c(0.0, 0.0));
    }

    #[test]
    fn theta_zero_at_one() {
        let v = theta(c(1.0, 0.0), c(0.3, 0.0)).unwrap();
        assert_eq!(v, c(0.0, 0.0));
    }

    #[test]
    fn theta_base_zero_is_one_minus_z() {
        let v = theta(c(0.4, 0.0), c(0.0, 0.0)).unwrap();
        assert_close(v, c(0.6, 0.0), 1e-15);
    }

    #[test]
    fn theta_rejects_zero_argument() {
        assert!(theta(c(0.0, 0.0), c(0.3, 0.0)).is_err());
    }

    #[test]
    fn gamma_is_one_at_sqrt_pq() {
        let q = c(0.3, 0.0);
        let p = c(0.2, 0.0);
        let z = (p * q).sqrt();
        let v = elliptic_gamma(z, q, p).unwrap();
        assert_close(v, c(1.0, 0.0), 1e-13);
    }

    #[test]
    fn gamma_reflection() {
        let q = c(0.3, 0.0);
        let p = c(0.2, 0.0);
        let z = c(0.5, 0.0);
        let v = elliptic_gamma(z, q, p).unwrap() * elliptic_gamma(p * q / z, q, p).unwrap();
        assert_close(v, c(1.0, 0.0), 1e-13);
    }

    #[test]
    fn gamma_pole_reports_lattice_indices() {
        let q = c(0.3, 0.0);
        let p = c(0.2, 0.0);
        // z = q^-1 p^-2 is a pole.
        let z = 1.0 / (q * p * p);
        match elliptic_gamma(z, q, p) {
            Err(Error::Pole { j, k, .. }) => {
                assert_eq!((j, k), (1, 2));
            }
            other => panic!("expected pole error, got {other:?}"),
        }
    }

    #[test]
    fn b22_direct_substitutions() {
        let w = OmegaTriple::new(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_close(b22(c(0.0, 0.0), &w), c(5.0 / 6.0, 0.0), 1e-15);
        assert_close(b22(c(1.0, 0.0), &w), c(-1.0 / 6.0, 0.0), 1e-15);
    }

    #[test]
    fn poly_p_zero_at_half_sum_and_antisymmetric() {
        let w = OmegaTriple::new(c(1.0, 0.0), c(2.0, 0.0), c(0.0, 3.0)).unwrap();
        let half = w.sum() / 2.0;
        assert!(poly_p(half, &w).norm() < 1e-15);
        let u = c(0.7, 0.0);
        assert_close(poly_p(w.sum() - u, &w), -poly_p(u, &w), 1e-14);
    }

    #[test]
    fn bases_reconstruction_roundtrip() {
        let w = OmegaTriple::new(c(1.0, 0.5), c(2.0, 0.0), c(0.3, 3.0)).unwrap();
        let b = w.bases();
        let q = exp_2pi_i(w.omega1 / w.omega2);
        assert!((b.q - q).norm() / q.norm() <= 1e-14);
        assert_eq!(b.regime, Some(Regime::AllInside));
    }

    #[test]
    fn unit_circle_regime_detected() {
        // omega1/omega2 real positive: |q| = 1.
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let w = OmegaTriple::new(c(phi, 0.0), c(1.0, 0.0), c(0.0, 3.0)).unwrap();
        let b = w.bases();
        assert_eq!(b.regime, Some(Regime::UnitCircleQ));
        assert!((b.q.norm() - 1.0).abs() <= 1e-14);
        assert!(b.p_tilde.norm() < 1.0 && b.r_tilde.norm() < 1.0);
    }

    #[test]
    fn double_sine_zero_at_origin() {
        let w = OmegaTriple::new(c(1.0, 2.0), c(1.0, 0.0), c(0.0, 3.0)).unwrap();
        let v = double_sine(c(0.0, 0.0), &w).unwrap();
        assert_eq!(v, c(0.0, 0.0));
    }

    #[test]
    fn double_sine_rejects_bad_tau() {
        let w = OmegaTriple::new(c(1.0, 0.0), c(1.0, 2.0), c(0.0, 3.0)).unwrap();
        assert!(double_sine(c(0.5, 0.0), &w).is_err());
    }

    #[test]
    fn modified_gamma_two_paths_agree() {
        let w = OmegaTriple::new(c(1.0, 0.3), c(2.0, 0.0), c(1.0, 2.0)).unwrap();
        let u = c(0.3, 0.0);
        let a = modified_gamma_g(u, &w, GammaGPath::Product).unwrap();
        let b = modified_gamma_g(u, &w, GammaGPath::Modular).unwrap();
        assert_close(a, b, 1e-10);
    }

    #[test]
    fn modified_gamma_reflection() {
        let w = OmegaTriple::new(c(1.0, 0.3), c(2.0, 0.0), c(1.0, 2.0)).unwrap();
        let a = c(0.4, 0.0);
        let b = w.sum() - a;
        let va = modified_gamma_g(a, &w, GammaGPath::Auto).unwrap();
        let vb = modified_gamma_g(b, &w, GammaGPath::Auto).unwrap();
        assert_close(va * vb, c(1.0, 0.0), 1e-11);
    }

    #[test]
    fn kappa_two_paths_agree() {
        let w = OmegaTriple::new(c(1.0, 0.5), c(2.0, 0.0), c(0.0, 3.0)).unwrap();
        let a = kappa(&w, KappaPath::EtaProducts).unwrap();
        let b = kappa(&w, KappaPath::OmegaForm).unwrap();
        assert_close(a, b, 1e-10);
    }

    // Frozen oracle values (extended-precision direct products).

    #[test]
    fn qpoch_matches_frozen_oracle_value() {
        let pol = TruncationPolicy::default();
        let v = qpoch_inf(c(0.2, 0.1), c(0.4, 0.0), &pol).unwrap();
        assert_close(v, c(0.690198706621409, -0.13639167823742987), 1e-13);
    }

    #[test]
    fn theta_matches_frozen_oracle_value() {
        let v = theta(c(0.5, 0.2), c(0.25, 0.0)).unwrap();
        assert_close(v, c(0.23065823226527551, -0.02255865768337235), 1e-13);
    }

    #[test]
    fn gamma_matches_frozen_oracle_value() {
        let v = elliptic_gamma(c(0.4, 0.3), c(0.35, 0.0), c(0.15, 0.0)).unwrap();
        assert_close(v, c(1.1733503832928978, 1.3333387830872871), 1e-12);
    }

    #[test]
    fn b22_matches_frozen_oracle_value() {
        let w = OmegaTriple::new(c(1.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)).unwrap();
        assert_close(b22(c(0.0, 0.3), &w), c(0.804, -0.26866666666666666), 1e-14);
    }

    #[test]
    fn poly_p_matches_frozen_oracle_value() {
        let w = OmegaTriple::new(c(1.0, 0.0), c(1.0, 0.5), c(0.0, 2.0)).unwrap();
        assert_close(poly_p(c(0.2, 0.0), &w), c(-0.2917, -0.2667333333333333), 1e-14);
    }

    #[test]
    fn modified_gamma_matches_frozen_oracle_value() {
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let w = OmegaTriple::new(c(1.0, 0.0), c(phi, 0.0), c(0.0, 3.0)).unwrap();
        let v = modified_gamma_g(c(0.25, 0.0), &w, GammaGPath::Auto).unwrap();
        assert_close(v, c(0.7139635158222818, 0.7293733256340014), 1e-12);
    }

    #[test]
    fn double_sine_matches_frozen_oracle_value() {
        let w = OmegaTriple::new(c(1.0, 2.0), c(1.0, 0.0), c(0.0, 3.0)).unwrap();
        let v = double_sine(c(0.5, 0.0), &w).unwrap();
        assert_close(v, c(2.446144895037109, -0.5872674309306698), 1e-13);
    }

    #[test]
    fn kappa_matches_frozen_oracle_values() {
        let w = OmegaTriple::new(c(1.0, 0.5), c(2.0, 0.0), c(0.0, 3.0)).unwrap();
        let v = kappa(&w, KappaPath::EtaProducts).unwrap();
        assert_close(v, c(-0.863531895132741, 0.003277443846832119), 1e-13);
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let w = OmegaTriple::new(c(phi, 0.0), c(1.0, 0.0), c(0.0, 2.0)).unwrap();
        let v = kappa(&w, KappaPath::OmegaForm).unwrap();
        assert_close(v, c(-1.2471977499082416, 0.2528155214859444), 1e-12);
    }

    #[test]
    fn kappa_rejects_inadmissible_path() {
        // |q| = 1 here, so the eta-products path must refuse.
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let w = OmegaTriple::new(c(phi, 0.0), c(1.0, 0.0), c(0.0, 2.0)).unwrap();
        assert!(kappa(&w, KappaPath::EtaProducts).is_err());
        assert!(kappa(&w, KappaPath::OmegaForm).is_ok());
    }
}
