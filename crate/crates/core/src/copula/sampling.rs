//! Sampling by conditional inversion.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::{archimedean, clamp_unit, elliptical, CopulaFamily, FamilyTag, UnitSquarePoint, EPS_CLAMP};
use crate::error::{Error, Result};
use crate::special::{norm_cdf, t_cdf};

const ROOT_TOL: f64 = 1e-10;

/// Finds `v` in `[EPS_CLAMP, 1 - EPS_CLAMP]` with `h(v) = p` for an increasing `h`,
/// by secant steps safeguarded with bisection. Returns `None` on non-convergence.
pub fn solve_conditional<F: Fn(f64) -> f64>(h: F, p: f64) -> Option<f64> {
    let (mut lo, mut hi) = (EPS_CLAMP, 1.0 - EPS_CLAMP);
    let mut f_lo = h(lo) - p;
    let mut f_hi = h(hi) - p;
    if f_lo >= 0.0 {
        return Some(lo);
    }
    if f_hi <= 0.0 {
        return Some(hi);
    }
    let mut bisect_next = false;
    for _ in 0..300 {
        if hi - lo <= ROOT_TOL {
            return Some(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        let mut x = if bisect_next { mid } else { lo - f_lo * (hi - lo) / (f_hi - f_lo) };
        // keep secant iterates well inside the bracket
        let margin = 0.01 * (hi - lo);
        if !x.is_finite() || x <= lo + margin || x >= hi - margin {
            x = mid;
        }
        let fx = h(x) - p;
        if !fx.is_finite() {
            return None;
        }
        if fx == 0.0 {
            return Some(x);
        }
        let width = hi - lo;
        if fx < 0.0 {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        // force a bisection when the bracket failed to halve
        bisect_next = hi - lo > 0.5 * width;
    }
    None
}

pub(super) fn cond_u_inverse(family: &CopulaFamily, u: f64, p: f64) -> Result<f64> {
    let u = clamp_unit(u);
    let p = clamp_unit(p);
    let [a, b] = family.params;
    let v = match family.tag {
        FamilyTag::Gaussian => elliptical::gaussian_cond_inverse(u, p, a),
        FamilyTag::StudentT => elliptical::t_cond_inverse(u, p, a, b),
        FamilyTag::Frank => archimedean::frank_cond_inverse(u, p, a),
        FamilyTag::Clayton => archimedean::clayton_cond_inverse(u, p, a),
        _ => solve_conditional(|v| family.cond_u(u, v), p).ok_or_else(|| Error::Sampling {
            family: family.to_string(),
            conditioning: u,
        })?,
    };
    Ok(clamp_unit(v))
}

pub(super) fn sample<R: Rng + ?Sized>(
    family: &CopulaFamily,
    n: usize,
    rng: &mut R,
) -> Result<Vec<UnitSquarePoint>> {
    let [a, b] = family.params;
    let mut out = Vec::with_capacity(n);
    match family.tag {
        FamilyTag::Gaussian => {
            let s = (1.0 - a * a).sqrt();
            for _ in 0..n {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                out.push(UnitSquarePoint::new(norm_cdf(z1), norm_cdf(a * z1 + s * z2)));
            }
        }
        FamilyTag::StudentT => {
            let s = (1.0 - a * a).sqrt();
            let chi = ChiSquared::new(b).map_err(|e| Error::params("student_t", e.to_string()))?;
            for _ in 0..n {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                let w = (chi.sample(rng) / b).sqrt();
                out.push(UnitSquarePoint::new(t_cdf(z1 / w, b), t_cdf((a * z1 + s * z2) / w, b)));
            }
        }
        FamilyTag::InvertedGumbel => {
            let g = CopulaFamily { tag: FamilyTag::Gumbel, params: family.params };
            for p in sample(&g, n, rng)? {
                out.push(UnitSquarePoint::new(1.0 - p.u, 1.0 - p.v));
            }
        }
        _ => {
            for _ in 0..n {
                let u = clamp_unit(rng.random::<f64>());
                let p = clamp_unit(rng.random::<f64>());
                let v = cond_u_inverse(family, u, p)?;
                out.push(UnitSquarePoint::new(u, v));
            }
        }
    }
    Ok(out)
}
