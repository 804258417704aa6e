//! Extreme-value copulas `C(u, v) = exp(-V(x, y))` with `x = -ln u`, `y = -ln v`
//! and `V` homogeneous of order one.

use super::FamilyTag;
use crate::special::{beta_inc_complement, ln_gamma, norm_cdf, norm_pdf};

/// Exponent function and its partial derivatives.
struct Exponent {
    v: f64,
    vx: f64,
    vy: f64,
    /// `-∂²V/∂x∂y`, non-negative.
    neg_vxy: f64,
}

/// `ln(1 + e^l)` without overflow.
fn ln1p_exp(l: f64) -> f64 {
    if l > 36.0 {
        l + (-l).exp()
    } else {
        l.exp().ln_1p()
    }
}

fn gumbel(x: f64, y: f64, alpha: f64) -> Exponent {
    let m = x.max(y);
    let (xm, ym) = (x / m, y / m);
    let r = xm.min(ym).powf(alpha);
    let base = 1.0 + r;
    let v = m * base.powf(1.0 / alpha);
    let b1 = base.powf(1.0 / alpha - 1.0);
    let vx = xm.powf(alpha - 1.0) * b1;
    let vy = ym.powf(alpha - 1.0) * b1;
    let neg_vxy = (alpha - 1.0) / m * base.powf(1.0 / alpha - 2.0) * (xm * ym).powf(alpha - 1.0);
    Exponent { v, vx, vy, neg_vxy }
}

fn husler_reiss(x: f64, y: f64, alpha: f64) -> Exponent {
    let l = (x / y).ln();
    let z1 = 1.0 / alpha + 0.5 * alpha * l;
    let z2 = 1.0 / alpha - 0.5 * alpha * l;
    let vx = norm_cdf(z1);
    let vy = norm_cdf(z2);
    Exponent { v: x * vx + y * vy, vx, vy, neg_vxy: 0.5 * alpha * norm_pdf(z1) / y }
}

fn galambos(x: f64, y: f64, alpha: f64) -> Exponent {
    let lr = alpha * (x.ln() - y.ln()); // ln (x/y)^alpha
    let mn = x.min(y);
    let ratio = (x.max(y) / mn).powf(-alpha);
    let v = x + y - mn * (1.0 + ratio).powf(-1.0 / alpha);
    let e = 1.0 + 1.0 / alpha;
    // V_x = 1 - (1 + rho)^(-1 - 1/alpha), rho = (x/y)^alpha
    let vx = -(-e * ln1p_exp(lr)).exp_m1();
    let vy = -(-e * ln1p_exp(-lr)).exp_m1();
    // -V_xy = (1 + alpha) rho (1 + rho)^(-2 - 1/alpha) / y
    let neg_vxy = (1.0 + alpha) * (lr - (2.0 + 1.0 / alpha) * ln1p_exp(lr)).exp() / y;
    Exponent { v, vx, vy, neg_vxy }
}

fn coles_tawn(x: f64, y: f64, alpha: f64, beta: f64) -> Exponent {
    let den = alpha * y + beta * x;
    let q = alpha * y / den;
    let qc = beta * x / den;
    // 1 - Be(q; a+1, b) = Be(1-q; b, a+1)
    let vx = beta_inc_complement(beta, alpha + 1.0, qc, q);
    let vy = beta_inc_complement(alpha, beta + 1.0, q, qc);
    let v = x * vx + y * vy;
    let ln_beta = ln_gamma(alpha + 1.0) + ln_gamma(beta) - ln_gamma(alpha + beta + 1.0);
    let ln_dens = alpha * q.ln() + (beta - 1.0) * qc.ln() - ln_beta;
    let neg_vxy = ln_dens.exp() * alpha * beta * x / (den * den);
    Exponent { v, vx, vy, neg_vxy }
}

fn exponent(tag: FamilyTag, x: f64, y: f64, a: f64, b: f64) -> Exponent {
    match tag {
        FamilyTag::Gumbel => gumbel(x, y, a),
        FamilyTag::HuslerReiss => husler_reiss(x, y, a),
        FamilyTag::Galambos => galambos(x, y, a),
        FamilyTag::ColesTawn => coles_tawn(x, y, a, b),
        other => unreachable!("{other} is not an extreme-value family"),
    }
}

pub(super) fn ev_cdf(tag: FamilyTag, u: f64, v: f64, a: f64, b: f64) -> f64 {
    (-exponent(tag, -u.ln(), -v.ln(), a, b).v).exp()
}

pub(super) fn ev_survival(tag: FamilyTag, u: f64, v: f64, a: f64, b: f64) -> f64 {
    let e = exponent(tag, -u.ln(), -v.ln(), a, b);
    (1.0 - u) + (1.0 - v) + (-e.v).exp_m1()
}

pub(super) fn ev_pdf(tag: FamilyTag, u: f64, v: f64, a: f64, b: f64) -> f64 {
    let (x, y) = (-u.ln(), -v.ln());
    let e = exponent(tag, x, y, a, b);
    (x + y - e.v).exp() * (e.vx * e.vy + e.neg_vxy)
}

pub(super) fn ev_cond_u(tag: FamilyTag, u: f64, v: f64, a: f64, b: f64) -> f64 {
    let x = -u.ln();
    let e = exponent(tag, x, -v.ln(), a, b);
    (x - e.v).exp() * e.vx
}

pub(super) fn ev_cond_v(tag: FamilyTag, u: f64, v: f64, a: f64, b: f64) -> f64 {
    let y = -v.ln();
    let e = exponent(tag, -u.ln(), y, a, b);
    (y - e.v).exp() * e.vy
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coles_tawn_has_uniform_margins() {
        // V(x, 0+) = x and V(0+, y) = y
        let e = coles_tawn(0.7, 1e-12, 1.3, 0.6);
        assert_relative_eq!(e.v, 0.7, max_relative = 1e-9);
        let e = coles_tawn(1e-12, 0.4, 1.3, 0.6);
        assert_relative_eq!(e.v, 0.4, max_relative = 1e-9);
    }

    #[test]
    fn exponent_derivatives_match_finite_differences() {
        let h = 1e-6;
        for tag in [FamilyTag::Gumbel, FamilyTag::HuslerReiss, FamilyTag::Galambos, FamilyTag::ColesTawn] {
            let (a, b) = if tag == FamilyTag::ColesTawn { (0.8, 2.1) } else { (1.7, 0.0) };
            let (x, y) = (0.6, 1.4);
            let e = exponent(tag, x, y, a, b);
            let fd_x = (exponent(tag, x + h, y, a, b).v - exponent(tag, x - h, y, a, b).v) / (2.0 * h);
            let fd_y = (exponent(tag, x, y + h, a, b).v - exponent(tag, x, y - h, a, b).v) / (2.0 * h);
            let fd_xy = (exponent(tag, x, y + h, a, b).vx - exponent(tag, x, y - h, a, b).vx) / (2.0 * h);
            assert_relative_eq!(e.vx, fd_x, max_relative = 1e-7);
            assert_relative_eq!(e.vy, fd_y, max_relative = 1e-7);
            assert_relative_eq!(e.neg_vxy, -fd_xy, max_relative = 1e-6);
            // Euler's relation for an order-one homogeneous function
            assert_relative_eq!(x * e.vx + y * e.vy, e.v, max_relative = 1e-12);
        }
    }

    #[test]
    fn galambos_and_husler_reiss_appendix_densities() {
        let (u, v, a): (f64, f64, f64) = (0.35, 0.8, 1.3);
        let (x, y) = (-u.ln(), -v.ln());
        let c = ev_cdf(FamilyTag::Galambos, u, v, a, 0.0);
        let s = x.powf(-a) + y.powf(-a);
        let appendix = c / (u * v)
            * (1.0 - s.powf(-1.0 - 1.0 / a) * (x.powf(-a - 1.0) + y.powf(-a - 1.0))
                + s.powf(-2.0 - 1.0 / a) * (x * y).powf(-a - 1.0) * (1.0 + a + s.powf(-1.0 / a)));
        assert_relative_eq!(ev_pdf(FamilyTag::Galambos, u, v, a, 0.0), appendix, max_relative = 1e-12);

        let c = ev_cdf(FamilyTag::HuslerReiss, u, v, a, 0.0);
        let z1 = 1.0 / a + 0.5 * a * (x / y).ln();
        let z2 = 1.0 / a + 0.5 * a * (y / x).ln();
        let appendix = c / (u * v) * (norm_cdf(z1) * norm_cdf(z2) + a / (2.0 * y) * norm_pdf(z1));
        assert_relative_eq!(ev_pdf(FamilyTag::HuslerReiss, u, v, a, 0.0), appendix, max_relative = 1e-12);
    }
}
