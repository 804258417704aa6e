//! Frank, Clayton and Joe copulas.

use crate::quadrature::GaussLegendre;
use std::sync::OnceLock;

/// Below this |alpha| the Frank copula is evaluated as independence.
const FRANK_INDEPENDENCE: f64 = 1e-10;

pub(super) fn frank_cdf(u: f64, v: f64, alpha: f64) -> f64 {
    if alpha.abs() < FRANK_INDEPENDENCE {
        return u * v;
    }
    let a = (-alpha * u).exp_m1();
    let b = (-alpha * v).exp_m1();
    let d = (-alpha).exp_m1();
    -(a * b / d).ln_1p() / alpha
}

pub(super) fn frank_pdf(u: f64, v: f64, alpha: f64) -> f64 {
    if alpha.abs() < FRANK_INDEPENDENCE {
        return 1.0;
    }
    let a = (-alpha * u).exp_m1();
    let b = (-alpha * v).exp_m1();
    let d = (-alpha).exp_m1();
    let den = d + a * b;
    -alpha * d * (-alpha * (u + v)).exp() / (den * den)
}

pub(super) fn frank_cond(u: f64, v: f64, alpha: f64) -> f64 {
    if alpha.abs() < FRANK_INDEPENDENCE {
        return v;
    }
    let a = (-alpha * u).exp_m1();
    let b = (-alpha * v).exp_m1();
    let d = (-alpha).exp_m1();
    (-alpha * u).exp() * b / (d + a * b)
}

pub(super) fn frank_cond_inverse(u: f64, p: f64, alpha: f64) -> f64 {
    if alpha.abs() < FRANK_INDEPENDENCE {
        return p;
    }
    let eu = (-alpha * u).exp();
    let d = (-alpha).exp_m1();
    let b = p * d / (eu * (1.0 - p) + p);
    -b.ln_1p() / alpha
}

/// `ln(u^-a + v^-a - 1)` without overflow.
fn clayton_log_t(u: f64, v: f64, alpha: f64) -> f64 {
    let la = -alpha * u.ln();
    let lb = -alpha * v.ln();
    let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
    // t = e^hi + e^lo - 1 = e^hi (1 + (e^lo - 1) e^-hi)
    let rest = if lo < 700.0 { lo.exp_m1() * (-hi).exp() } else { (lo - hi).exp() - (-hi).exp() };
    hi + rest.ln_1p()
}

pub(super) fn clayton_cdf(u: f64, v: f64, alpha: f64) -> f64 {
    (-clayton_log_t(u, v, alpha) / alpha).exp()
}

pub(super) fn clayton_pdf(u: f64, v: f64, alpha: f64) -> f64 {
    let lt = clayton_log_t(u, v, alpha);
    ((1.0 + alpha).ln() - (alpha + 1.0) * (u.ln() + v.ln()) - (1.0 / alpha + 2.0) * lt).exp()
}

pub(super) fn clayton_cond(u: f64, v: f64, alpha: f64) -> f64 {
    // (1 + (u/v)^a - u^a)^(-1 - 1/a)
    let r = (alpha * (u.ln() - v.ln())).exp();
    let ua = (alpha * u.ln()).exp();
    (-(1.0 + 1.0 / alpha) * (r - ua).ln_1p()).exp()
}

pub(super) fn clayton_cond_inverse(u: f64, p: f64, alpha: f64) -> f64 {
    // v = (1 + u^-a (p^(-a/(1+a)) - 1))^(-1/a)
    let w = (-alpha / (1.0 + alpha) * p.ln()).exp_m1();
    if w <= 0.0 {
        return 1.0;
    }
    let l = w.ln() - alpha * u.ln();
    let log_term = if l > 36.0 { l + (-l).exp() } else { l.exp().ln_1p() };
    (-log_term / alpha).exp()
}

fn corner_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

pub(super) fn clayton_survival(u: f64, v: f64, alpha: f64) -> f64 {
    let direct = (1.0 - u) + (1.0 - v) - 1.0 + clayton_cdf(u, v, alpha);
    if direct >= 1e-6 {
        return direct;
    }
    // The closed form cancels catastrophically near (1, 1); integrate the density instead.
    corner_rule().integrate_2d((u, 1.0), (v, 1.0), |s, t| clayton_pdf(s, t, alpha))
}

/// `(A, s^a, t^a)` with `A = s^a + t^a - s^a t^a`, `s = 1 - u`, `t = 1 - v`.
fn joe_parts(u: f64, v: f64, alpha: f64) -> (f64, f64, f64, f64, f64) {
    let s = 1.0 - u;
    let t = 1.0 - v;
    let sa = s.powf(alpha);
    let ta = t.powf(alpha);
    (sa + ta - sa * ta, sa, ta, s, t)
}

pub(super) fn joe_cdf(u: f64, v: f64, alpha: f64) -> f64 {
    let (a, ..) = joe_parts(u, v, alpha);
    1.0 - a.powf(1.0 / alpha)
}

pub(super) fn joe_survival(u: f64, v: f64, alpha: f64) -> f64 {
    let (a, _, _, s, t) = joe_parts(u, v, alpha);
    s + t - a.powf(1.0 / alpha)
}

pub(super) fn joe_pdf(u: f64, v: f64, alpha: f64) -> f64 {
    let (a, sa, ta, s, t) = joe_parts(u, v, alpha);
    a.powf(1.0 / alpha - 2.0) * (s * t).powf(alpha - 1.0) * (alpha - 1.0 + sa + ta - sa * ta)
}

pub(super) fn joe_cond(u: f64, v: f64, alpha: f64) -> f64 {
    let (a, _, ta, s, _) = joe_parts(u, v, alpha);
    a.powf(1.0 / alpha - 1.0) * s.powf(alpha - 1.0) * (1.0 - ta)
}
