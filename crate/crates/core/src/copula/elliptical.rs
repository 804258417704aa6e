//! Gaussian and Student t copulas.

use crate::quadrature::tanh_sinh;
use crate::special::{bvn_cdf, ln_gamma, norm_cdf, norm_quantile, t_cdf as t1_cdf, t_pdf as t1_pdf, t_quantile};

pub(super) fn gaussian_cdf(u: f64, v: f64, rho: f64) -> f64 {
    bvn_cdf(norm_quantile(u), norm_quantile(v), rho)
}

pub(super) fn gaussian_pdf(u: f64, v: f64, rho: f64) -> f64 {
    let x = norm_quantile(u);
    let y = norm_quantile(v);
    let r2 = 1.0 - rho * rho;
    (-(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)).exp() / r2.sqrt()
}

pub(super) fn gaussian_cond(u: f64, v: f64, rho: f64) -> f64 {
    let x = norm_quantile(u);
    let y = norm_quantile(v);
    norm_cdf((y - rho * x) / (1.0 - rho * rho).sqrt())
}

pub(super) fn gaussian_cond_inverse(u: f64, p: f64, rho: f64) -> f64 {
    let x = norm_quantile(u);
    norm_cdf(rho * x + (1.0 - rho * rho).sqrt() * norm_quantile(p))
}

fn t_ratio(x: f64, y: f64, rho: f64, nu: f64) -> f64 {
    (y - rho * x) / ((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0)).sqrt()
}

pub(super) fn t_pdf(u: f64, v: f64, rho: f64, nu: f64) -> f64 {
    let x = t_quantile(u, nu);
    let y = t_quantile(v, nu);
    let r2 = 1.0 - rho * rho;
    let log_const = ln_gamma(0.5 * (nu + 2.0)) + ln_gamma(0.5 * nu)
        - 2.0 * ln_gamma(0.5 * (nu + 1.0))
        - 0.5 * r2.ln();
    let q = (x * x + y * y - 2.0 * rho * x * y) / (nu * r2);
    let log_num = 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p());
    (log_const + log_num - 0.5 * (nu + 2.0) * q.ln_1p()).exp()
}

pub(super) fn t_cond(u: f64, v: f64, rho: f64, nu: f64) -> f64 {
    let x = t_quantile(u, nu);
    let y = t_quantile(v, nu);
    t1_cdf(t_ratio(x, y, rho, nu), nu + 1.0)
}

pub(super) fn t_cond_inverse(u: f64, p: f64, rho: f64, nu: f64) -> f64 {
    let x = t_quantile(u, nu);
    let z = t_quantile(p, nu + 1.0);
    let y = rho * x + z * ((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
    t1_cdf(y, nu)
}

/// `C(u, v) = ∫_{-∞}^{x_u} t_ν(s) P(Y ≤ y_v | X = s) ds`, with the half-line
/// mapped onto `[0, 1)` by `s = x_u - w / (1 - w)`.
pub(super) fn t_cdf(u: f64, v: f64, rho: f64, nu: f64) -> f64 {
    let xu = t_quantile(u, nu);
    let yv = t_quantile(v, nu);
    let value = tanh_sinh(0.0, 1.0, 1e-13, |w, _, one_minus_w| {
        let s = xu - w / one_minus_w;
        t1_pdf(s, nu) * t1_cdf(t_ratio(s, yv, rho, nu), nu + 1.0) / (one_minus_w * one_minus_w)
    });
    value.clamp(0.0, u.min(v))
}
