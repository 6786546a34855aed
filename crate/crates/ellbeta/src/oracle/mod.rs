//! Independent extended-precision oracle.
//!
//! Every function here evaluates truncated products *directly* in
//! double-double arithmetic, term by term, with no log-space
//! accumulation, no tail-bound logic and no code shared with the fast
//! path. Golden fixture values are produced from these evaluators.

pub mod dd;

use dd::{Dd, DdC};
use num_complex::Complex64;

/// Truncation depth for single-index products.
pub const DEPTH_1D: usize = 256;
/// Truncation depth per index for double-index products.
pub const DEPTH_2D: usize = 128;
/// Conservative bound on the oracle's relative accuracy for the composite
/// kernels (double-double carries ~31 digits; deep products lose a few).
pub const ORACLE_PRECISION: f64 = 1e-26;

fn c(z: Complex64) -> DdC {
    DdC::from_c64(z)
}

/// prod_{j=0}^{depth-1} (1 - a b^j).
pub fn qpoch(a: DdC, b: DdC, depth: usize) -> DdC {
    let mut acc = DdC::ONE;
    let mut abj = a;
    for _ in 0..depth {
        acc = acc * (DdC::ONE - abj);
        abj = abj * b;
    }
    acc
}

/// theta(z; p) = (z; p) (p/z; p) at fixed depth.
pub fn theta(z: DdC, p: DdC, depth: usize) -> DdC {
    qpoch(z, p, depth) * qpoch(p / z, p, depth)
}

/// Gamma(z; q, p) as the truncated double product.
pub fn gamma(z: DdC, q: DdC, p: DdC, depth: usize) -> DdC {
    let zinv = z.recip();
    let qp = q * p;
    let mut num = DdC::ONE;
    let mut den = DdC::ONE;
    let mut qj = DdC::ONE;
    for _ in 0..depth {
        let mut w = qj;
        for _ in 0..depth {
            num = num * (DdC::ONE - qp * w * zinv);
            den = den * (DdC::ONE - z * w);
            w = w * p;
        }
        qj = qj * q;
    }
    num / den
}

#[derive(Debug, Clone, Copy)]
pub struct OmegaDd {
    pub w1: DdC,
    pub w2: DdC,
    pub w3: DdC,
}

impl OmegaDd {
    pub fn from_c64(w1: Complex64, w2: Complex64, w3: Complex64) -> Self {
        OmegaDd {
            w1: c(w1),
            w2: c(w2),
            w3: c(w3),
        }
    }

    pub fn sum(&self) -> DdC {
        self.w1 + self.w2 + self.w3
    }
}

/// B_{2,2}(u; omega).
pub fn b22(u: DdC, w: &OmegaDd) -> DdC {
    let six = DdC::from_f64s(6.0, 0.0);
    let half = DdC::from_f64s(0.5, 0.0);
    u * u / (w.w1 * w.w2) - u / w.w1 - u / w.w2
        + w.w1 / (six * w.w2)
        + w.w2 / (six * w.w1)
        + half
}

/// P(u): the cubic with P(v + sum(w)/2) = v (v^2 - sum(w^2)/4) / (3 w1 w2 w3).
pub fn poly_p(u: DdC, w: &OmegaDd) -> DdC {
    let v = u - w.sum().scale(Dd::from_f64(0.5));
    let sq = w.w1 * w.w1 + w.w2 * w.w2 + w.w3 * w.w3;
    let quarter = DdC::from_f64s(0.25, 0.0);
    let three = DdC::from_f64s(3.0, 0.0);
    v * (v * v - sq * quarter) / (three * w.w1 * w.w2 * w.w3)
}

/// G(u; omega) through the modular representation
/// exp(-pi i P(u)) Gamma(exp(-2 pi i u / w3); r~, p~).
pub fn g_modular(u: DdC, w: &OmegaDd, depth: usize) -> DdC {
    let r_tilde = (-(w.w1 / w.w3)).exp_2pi_i();
    let p_tilde = (-(w.w2 / w.w3)).exp_2pi_i();
    let z = (-(u / w.w3)).exp_2pi_i();
    let minus_pi_i = DdC::new(Dd::ZERO, -Dd::PI);
    let phase = (minus_pi_i * poly_p(u, w)).exp();
    phase * gamma(z, r_tilde, p_tilde, depth)
}

/// S(u; w1, w2) as the ratio of the two defining products.
pub fn double_sine(u: DdC, w1: DdC, w2: DdC, depth: usize) -> DdC {
    let q = (w1 / w2).exp_2pi_i();
    let q_tilde = (-(w2 / w1)).exp_2pi_i();
    let num = qpoch((u / w2).exp_2pi_i(), q, depth);
    let den = qpoch((u / w1).exp_2pi_i() * q_tilde, q_tilde, depth);
    num / den
}

/// kappa via eta products: -(q~;q~) / ((q;q)(p;p)(r;r)).
pub fn kappa_eta(w: &OmegaDd, depth: usize) -> DdC {
    let q = (w.w1 / w.w2).exp_2pi_i();
    let p = (w.w3 / w.w2).exp_2pi_i();
    let r = (w.w3 / w.w1).exp_2pi_i();
    let qt = (-(w.w2 / w.w1)).exp_2pi_i();
    let num = qpoch(qt, qt, depth);
    let den = qpoch(q, q, depth) * qpoch(p, p, depth) * qpoch(r, r, depth);
    -(num / den)
}

/// kappa via the omega form: w3 e^{pi i/12 (sum w)(sum 1/w)} / (w2 (r~;r~)(p~;p~)).
pub fn kappa_omega(w: &OmegaDd, depth: usize) -> DdC {
    let r_tilde = (-(w.w1 / w.w3)).exp_2pi_i();
    let p_tilde = (-(w.w2 / w.w3)).exp_2pi_i();
    let sum_inv = w.w1.recip() + w.w2.recip() + w.w3.recip();
    let twelfth = Dd::from_f64(12.0);
    let phase = (DdC::new(Dd::ZERO, Dd::PI / twelfth) * w.sum() * sum_inv).exp();
    w.w3 * phase / (w.w2 * qpoch(r_tilde, r_tilde, depth) * qpoch(p_tilde, p_tilde, depth))
}

// ---------------------------------------------------------------------------
// Kernel compositions
// ---------------------------------------------------------------------------

fn prod_all(v: &[DdC]) -> DdC {
    v.iter().fold(DdC::ONE, |a, &x| a * x)
}

/// Univariate kernel rho(z, t1..t5) at bases (q, p).
pub fn rho_univariate(z: Complex64, t: &[Complex64; 5], q: Complex64, p: Complex64) -> DdC {
    let (z, q, p) = (c(z), c(q), c(p));
    let t: Vec<DdC> = t.iter().map(|&x| c(x)).collect();
    let a = prod_all(&t);
    let zinv = z.recip();
    let d = DEPTH_2D;
    let mut num = DdC::ONE;
    for &tm in &t {
        num = num * gamma(tm * z, q, p, d) * gamma(tm * zinv, q, p, d) * gamma(a / tm, q, p, d);
    }
    let mut den = gamma(z * z, q, p, d)
        * gamma(zinv * zinv, q, p, d)
        * gamma(a * z, q, p, d)
        * gamma(a * zinv, q, p, d);
    for m in 0..5 {
        for s in (m + 1)..5 {
            den = den * gamma(t[m] * t[s], q, p, d);
        }
    }
    num / den
}

/// Univariate certificate g(z, t1..t5).
pub fn cert_g_univariate(
    z: Complex64,
    t: &[Complex64; 5],
    q: Complex64,
    p: Complex64,
) -> DdC {
    let rho = rho_univariate(z, t, q, p);
    let (zd, pd) = (c(z), c(p));
    let td: Vec<DdC> = t.iter().map(|&x| c(x)).collect();
    let a = prod_all(&td);
    let d = DEPTH_1D;
    let mut fac = DdC::ONE;
    for &tj in &td {
        fac = fac * theta(tj * zd, pd, d);
    }
    for &tj in &td[1..] {
        fac = fac / theta(td[0] * tj, pd, d);
    }
    fac = fac * theta(td[0] * a, pd, d)
        / (theta(zd * zd, pd, d) * theta(a * zd, pd, d));
    rho * fac * (td[0] / zd)
}

/// C_n kernel rho(z, t; C_n), |t| = 2n+3.
pub fn rho_cn(z: &[Complex64], t: &[Complex64], q: Complex64, p: Complex64) -> DdC {
    let n = z.len();
    let zd: Vec<DdC> = z.iter().map(|&x| c(x)).collect();
    let td: Vec<DdC> = t.iter().map(|&x| c(x)).collect();
    let (q, p) = (c(q), c(p));
    let a = prod_all(&td);
    let d = DEPTH_2D;
    let mut v = DdC::ONE;
    for i in 0..n {
        for j in (i + 1)..n {
            let (zi, zj) = (zd[i], zd[j]);
            v = v
                / (gamma(zi * zj, q, p, d)
                    * gamma(zi / zj, q, p, d)
                    * gamma(zj / zi, q, p, d)
                    * gamma((zi * zj).recip(), q, p, d));
        }
    }
    for &zi in &zd {
        let zinv = zi.recip();
        for &tm in &td {
            v = v * gamma(tm * zi, q, p, d) * gamma(tm * zinv, q, p, d);
        }
        v = v
            / (gamma(zi * zi, q, p, d)
                * gamma(zinv * zinv, q, p, d)
                * gamma(a * zi, q, p, d)
                * gamma(a * zinv, q, p, d));
    }
    for &tm in &td {
        v = v * gamma(a / tm, q, p, d);
    }
    for m in 0..td.len() {
        for s in (m + 1)..td.len() {
            v = v / gamma(td[m] * td[s], q, p, d);
        }
    }
    v
}

/// C_n certificate g_i(z, t), 0-based index i.
pub fn cert_g_cn(
    i: usize,
    z: &[Complex64],
    t: &[Complex64],
    q: Complex64,
    p: Complex64,
) -> DdC {
    let rho = rho_cn(z, t, q, p);
    let zd: Vec<DdC> = z.iter().map(|&x| c(x)).collect();
    let td: Vec<DdC> = t.iter().map(|&x| c(x)).collect();
    let pd = c(p);
    let a = prod_all(&td);
    let zi = zd[i];
    let d = DEPTH_1D;
    let mut fac = DdC::ONE;
    for (j, &zj) in zd.iter().enumerate() {
        if j == i {
            continue;
        }
        fac = fac * theta(td[0] * zj, pd, d) * theta(td[0] / zj, pd, d)
            / (theta(zi * zj, pd, d) * theta(zi / zj, pd, d));
    }
    for &tj in &td {
        fac = fac * theta(tj * zi, pd, d);
    }
    for &tj in &td[1..] {
        fac = fac / theta(td[0] * tj, pd, d);
    }
    fac = fac * theta(td[0] * a, pd, d)
        / (theta(zi * zi, pd, d) * theta(a * zi, pd, d));
    rho * fac * (td[0] / zi)
}

/// A_n kernel rho(z, t, s; A_n): t has n+1 entries, s has n+2;
/// z has the n free coordinates, z_{n+1} = 1/(z_1...z_n).
pub fn rho_an(
    z: &[Complex64],
    t: &[Complex64],
    s: &[Complex64],
    q: Complex64,
    p: Complex64,
) -> DdC {
    let n = z.len();
    let mut zd: Vec<DdC> = z.iter().map(|&x| c(x)).collect();
    zd.push(prod_all(&zd).recip());
    let td: Vec<DdC> = t.iter().map(|&x| c(x)).collect();
    let sd: Vec<DdC> = s.iter().map(|&x| c(x)).collect();
    let (q, p) = (c(q), c(p));
    let tt = prod_all(&td);
    let ss = prod_all(&sd);
    let ts = tt * ss;
    let d = DEPTH_2D;
    let mut v = DdC::ONE;
    for (i, &zi) in zd.iter().enumerate() {
        let zinv = zi.recip();
        for &tm in &td {
            v = v * gamma(tm * zinv, q, p, d);
        }
        for &sj in &sd {
            v = v * gamma(sj * zi, q, p, d);
        }
        v = v * gamma(ss * td[i], q, p, d);
        v = v / gamma(ts * zi, q, p, d);
        for &sj in &sd {
            v = v / gamma(td[i] * sj, q, p, d);
        }
    }
    for i in 0..=n {
        for j in (i + 1)..=n {
            v = v / (gamma(zd[i] / zd[j], q, p, d) * gamma(zd[j] / zd[i], q, p, d));
        }
    }
    v = v / gamma(tt, q, p, d);
    for &sj in &sd {
        v = v * gamma(ts / sj, q, p, d) / gamma(ss / sj, q, p, d);
    }
    v
}

/// A_n certificate g_i(z, t, s), 0-based i among the n free coordinates.
pub fn cert_g_an(
    i: usize,
    z: &[Complex64],
    t: &[Complex64],
    s: &[Complex64],
    q: Complex64,
    p: Complex64,
) -> DdC {
    let rho = rho_an(z, t, s, q, p);
    let mut zd: Vec<DdC> = z.iter().map(|&x| c(x)).collect();
    zd.push(prod_all(&zd).recip());
    let td: Vec<DdC> = t.iter().map(|&x| c(x)).collect();
    let sd: Vec<DdC> = s.iter().map(|&x| c(x)).collect();
    let pd = c(p);
    let tt = prod_all(&td);
    let ss = prod_all(&sd);
    let ts = tt * ss;
    let zi = zd[i];
    let d = DEPTH_1D;
    let mut fac = DdC::ONE;
    for (j, &zj) in zd.iter().enumerate() {
        if j == i {
            continue;
        }
        fac = fac * theta(td[0] / zj, pd, d) / theta(zi / zj, pd, d);
    }
    for &sj in &sd {
        fac = fac * theta(zi * sj, pd, d) / theta(td[0] * sj, pd, d);
    }
    fac = fac * theta(zi * tt / td[0], pd, d) * theta(ts * td[0], pd, d)
        / (theta(tt, pd, d) * theta(ts * zi, pd, d));
    rho * fac * (td[0] / zi)
}

/// D_n-type kernel Delta(z, t, s; A_n) at bases (rt, pt): t has n entries,
/// s has n+3, z has n free coordinates, z_{n+1} = 1/(z_1...z_n).
pub fn delta_dn(
    z: &[Complex64],
    t: &[Complex64],
    s: &[Complex64],
    rt: Complex64,
    pt: Complex64,
) -> DdC {
    let n = z.len();
    let mut zd: Vec<DdC> = z.iter().map(|&x| c(x)).collect();
    zd.push(prod_all(&zd).recip());
    let td: Vec<DdC> = t.iter().map(|&x| c(x)).collect();
    let sd: Vec<DdC> = s.iter().map(|&x| c(x)).collect();
    let (q, p) = (c(rt), c(pt));
    let dprod = prod_all(&sd);
    let d = DEPTH_2D;
    let mut v = DdC::ONE;
    for i in 0..=n {
        for j in (i + 1)..=n {
            v = v * gamma(dprod / (zd[i] * zd[j]), q, p, d)
                / (gamma(zd[i] / zd[j], q, p, d) * gamma(zd[j] / zd[i], q, p, d));
        }
    }
    for &sj in &sd {
        for &tm in &td {
            v = v * gamma(dprod * tm / sj, q, p, d) / gamma(tm * sj, q, p, d);
        }
    }
    for &zi in &zd {
        let zinv = zi.recip();
        for &tm in &td {
            v = v * gamma(tm * zi, q, p, d);
        }
        for &sj in &sd {
            v = v * gamma(sj * zinv, q, p, d);
        }
        for &tm in &td {
            v = v / gamma(dprod * tm * zinv, q, p, d);
        }
    }
    for j in 0..sd.len() {
        for k in (j + 1)..sd.len() {
            v = v / gamma(dprod / (sd[j] * sd[k]), q, p, d);
        }
    }
    v
}

/// Modified C_n kernel rho(u, g; C_n) built from G via the modular path.
pub fn rho_modified_cn(u: &[Complex64], g: &[Complex64], w: &OmegaDd, depth: usize) -> DdC {
    let ud: Vec<DdC> = u.iter().map(|&x| c(x)).collect();
    let gd: Vec<DdC> = g.iter().map(|&x| c(x)).collect();
    let aa = gd.iter().fold(DdC::ZERO, |a, &x| a + x);
    let gfn = |x: DdC| g_modular(x, w, depth);
    let mut v = DdC::ONE;
    for &ui in &ud {
        for &gm in &gd {
            v = v * gfn(gm + ui) * gfn(gm - ui);
        }
        let two_u = ui + ui;
        v = v / (gfn(two_u) * gfn(-two_u) * gfn(aa + ui) * gfn(aa - ui));
    }
    for &gm in &gd {
        v = v * gfn(aa - gm);
    }
    for m in 0..gd.len() {
        for s in (m + 1)..gd.len() {
            v = v / gfn(gd[m] + gd[s]);
        }
    }
    for i in 0..ud.len() {
        for j in (i + 1)..ud.len() {
            let (ui, uj) = (ud[i], ud[j]);
            v = v / (gfn(ui + uj) * gfn(ui - uj) * gfn(uj - ui) * gfn(-ui - uj));
        }
    }
    v
}

/// q-reduced C_n kernel rho(u, g; omega; C_n) built from the double sine.
pub fn rho_qreduced_cn(u: &[Complex64], g: &[Complex64], w: &OmegaDd, depth: usize) -> DdC {
    let ud: Vec<DdC> = u.iter().map(|&x| c(x)).collect();
    let gd: Vec<DdC> = g.iter().map(|&x| c(x)).collect();
    let aa = gd.iter().fold(DdC::ZERO, |a, &x| a + x);
    let sfn = |x: DdC| double_sine(x, w.w1, w.w2, depth);
    let mut v = DdC::ONE;
    for i in 0..ud.len() {
        for j in (i + 1)..ud.len() {
            let (ui, uj) = (ud[i], ud[j]);
            v = v * sfn(ui + uj) * sfn(ui - uj) * sfn(uj - ui) * sfn(-ui - uj);
        }
    }
    for &ui in &ud {
        let two_u = ui + ui;
        v = v * sfn(two_u) * sfn(-two_u) * sfn(aa + ui) * sfn(aa - ui);
        for &gm in &gd {
            v = v / (sfn(gm + ui) * sfn(gm - ui));
        }
    }
    for m in 0..gd.len() {
        for s in (m + 1)..gd.len() {
            v = v * sfn(gd[m] + gd[s]);
        }
    }
    for &gm in &gd {
        v = v / sfn(aa - gm);
    }
    v
}

/// q-reduced C_n certificate f_i(u, g), 0-based i.
pub fn cert_f_qreduced_cn(
    i: usize,
    u: &[Complex64],
    g: &[Complex64],
    w: &OmegaDd,
    depth: usize,
) -> DdC {
    let rho = rho_qreduced_cn(u, g, w, depth);
    let zd: Vec<DdC> = u.iter().map(|&x| (c(x) / w.w2).exp_2pi_i()).collect();
    let td: Vec<DdC> = g.iter().map(|&x| (c(x) / w.w2).exp_2pi_i()).collect();
    let aa = g.iter().fold(DdC::ZERO, |acc, &x| acc + c(x));
    let a = (aa / w.w2).exp_2pi_i();
    let zi = zd[i];
    let mut fac = DdC::ONE;
    for (j, &zj) in zd.iter().enumerate() {
        if j == i {
            continue;
        }
        fac = fac * (DdC::ONE - td[0] * zj) * (DdC::ONE - td[0] / zj)
            / ((DdC::ONE - zi * zj) * (DdC::ONE - zi / zj));
    }
    for &tj in &td {
        fac = fac * (DdC::ONE - tj * zi);
    }
    for &tj in &td[1..] {
        fac = fac / (DdC::ONE - td[0] * tj);
    }
    fac = fac * (DdC::ONE - td[0] * a) * td[0]
        / ((DdC::ONE - zi * zi) * (DdC::ONE - a * zi) * zi);
    rho * fac
}

/// Right-hand side of the symmetric A_n evaluation: the Gamma-product
/// factor multiplying (n+1)! (2 pi i)^n / ((q;q)(p;p))^n, for |t| = |s| = n+2.
pub fn an_sym_rhs_gamma_factor(
    t: &[Complex64],
    s: &[Complex64],
    q: Complex64,
    p: Complex64,
) -> DdC {
    let td: Vec<DdC> = t.iter().map(|&x| c(x)).collect();
    let sd: Vec<DdC> = s.iter().map(|&x| c(x)).collect();
    let (q, p) = (c(q), c(p));
    let a = prod_all(&td);
    let ss = prod_all(&sd);
    let d = DEPTH_2D;
    let mut v = DdC::ONE;
    for m in 0..td.len() {
        v = v * gamma(ss / sd[m], q, p, d) * gamma(a / td[m], q, p, d);
    }
    for &tj in &td {
        for &sk in &sd {
            v = v * gamma(tj * sk, q, p, d);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn oracle_qpoch_agrees_with_direct_f64_at_shallow_depth() {
        let a = DdC::from_f64s(0.2, 0.1);
        let b = DdC::from_f64s(0.4, 0.0);
        let v = qpoch(a, b, DEPTH_1D).to_c64();
        // Plain f64 direct product for a rough cross-check.
        let mut acc = Complex64::new(1.0, 0.0);
        let mut abj = c64(0.2, 0.1);
        for _ in 0..64 {
            acc *= Complex64::new(1.0, 0.0) - abj;
            abj *= c64(0.4, 0.0);
        }
        assert!((v - acc).norm() < 1e-13);
    }

    #[test]
    fn oracle_gamma_reflection_to_dd_precision() {
        let q = DdC::from_f64s(0.3, 0.0);
        let p = DdC::from_f64s(0.2, 0.0);
        let z = DdC::from_f64s(0.5, 0.1);
        let refl = gamma(z, q, p, DEPTH_2D) * gamma(q * p / z, q, p, DEPTH_2D);
        let err = (refl - DdC::ONE).norm_sqr().to_f64().sqrt();
        assert!(err < 1e-25, "reflection residual {err:.3e}");
    }

    #[test]
    fn oracle_gamma_q_shift_law() {
        let q = DdC::from_f64s(0.3, 0.0);
        let p = DdC::from_f64s(0.2, 0.0);
        let z = DdC::from_f64s(0.6, -0.2);
        let lhs = gamma(q * z, q, p, DEPTH_2D);
        let rhs = theta(z, p, DEPTH_1D) * gamma(z, q, p, DEPTH_2D);
        let err = (lhs - rhs).norm_sqr().to_f64().sqrt() / rhs.norm_sqr().to_f64().sqrt();
        assert!(err < 1e-25, "shift residual {err:.3e}");
    }

    #[test]
    fn oracle_kappa_paths_agree() {
        let w = OmegaDd::from_c64(c64(1.0, 0.5), c64(2.0, 0.0), c64(0.0, 3.0));
        let a = kappa_eta(&w, 512);
        let b = kappa_omega(&w, 512);
        let err = (a - b).norm_sqr().to_f64().sqrt() / b.norm_sqr().to_f64().sqrt();
        assert!(err < 1e-25, "kappa residual {err:.3e}");
    }

    #[test]
    fn oracle_g_modular_reflection() {
        let w = OmegaDd::from_c64(c64(1.0, 0.3), c64(2.0, 0.0), c64(1.0, 2.0));
        let a = DdC::from_f64s(0.4, 0.0);
        let b = w.sum() - a;
        let v = g_modular(a, &w, DEPTH_2D) * g_modular(b, &w, DEPTH_2D);
        let err = (v - DdC::ONE).norm_sqr().to_f64().sqrt();
        assert!(err < 1e-24, "G reflection residual {err:.3e}");
    }
}
