//! Special functions used by the copula families.
//!
//! Normal and Student t distribution functions, the regularised incomplete
//! beta function and the bivariate normal orthant probability. `erfc` comes
//! from `libm` and `ln_gamma` from `statrs`; everything else is implemented here so the
//! tail behaviour is under our control.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub use statrs::function::gamma::ln_gamma;

use crate::quadrature::GaussLegendre;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, accurate in both tails.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile (Wichura's AS 241, followed by one Newton step).
pub fn norm_quantile(p: f64) -> f64 {
    if p.is_nan() {
        return f64::NAN;
    }
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    let mut x = if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        q * (((((((r * 2509.080_928_730_122_7 + 33430.575_583_588_128) * r
            + 67265.770_927_008_7)
            * r
            + 45921.953_931_549_87)
            * r
            + 13731.693_765_509_461)
            * r
            + 1971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5)
            / (((((((r * 5226.495_278_852_545 + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0)
    } else {
        let tail = if q < 0.0 { p } else { 1.0 - p };
        let mut r = (-tail.ln()).sqrt();
        let v = if r <= 5.0 {
            r -= 1.6;
            (((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
                + 0.241_780_725_177_450_6)
                * r
                + 1.270_458_252_452_368_4)
                * r
                + 3.647_848_324_763_204_5)
                * r
                + 5.769_497_221_460_691)
                * r
                + 4.630_337_846_156_546)
                * r
                + 1.423_437_110_749_683_5)
                / (((((((r * 1.050_750_071_644_416_9e-9 + 5.475_938_084_995_345e-4) * r
                    + 0.015_198_666_563_616_457)
                    * r
                    + 0.148_103_976_427_480_08)
                    * r
                    + 0.689_767_334_985_1)
                    * r
                    + 1.676_384_830_183_803_8)
                    * r
                    + 2.053_191_626_637_759)
                    * r
                    + 1.0)
        } else {
            r -= 5.0;
            (((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
                + 0.001_242_660_947_388_078_4)
                * r
                + 0.026_532_189_526_576_124)
                * r
                + 0.296_560_571_828_504_9)
                * r
                + 1.784_826_539_917_291_3)
                * r
                + 5.463_784_911_164_114)
                * r
                + 6.657_904_643_501_103)
                / (((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446e-7) * r
                    + 1.846_318_317_510_054_8e-5)
                    * r
                    + 7.868_691_311_456_133e-4)
                    * r
                    + 0.014_875_361_290_850_615)
                    * r
                    + 0.136_929_880_922_735_8)
                    * r
                    + 0.599_832_206_555_888)
                    * r
                    + 1.0)
        };
        if q < 0.0 {
            -v
        } else {
            v
        }
    };
    // Newton polish against the lower or upper tail, whichever is smaller.
    let d = norm_pdf(x);
    if d > 0.0 {
        let err = if x < 0.0 {
            norm_cdf(x) - p
        } else {
            (1.0 - p) - norm_cdf(-x)
        };
        x -= err / d;
    }
    x
}

/// Regularised incomplete beta function `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    beta_inc_complement(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` where the caller supplies `y = 1 - x` separately, so that
/// arguments close to one do not lose precision.
pub fn beta_inc_complement(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front =
        a * x.ln() + b * y.ln() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b));
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x, y) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, y, x) / b
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64, _y: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..2000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Log of the Student t density normalising constant for `nu` degrees of freedom.
fn t_log_norm(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln()
}

/// Student t density.
pub fn t_pdf(x: f64, nu: f64) -> f64 {
    (t_log_norm(nu) - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
}

/// Student t distribution function.
pub fn t_cdf(x: f64, nu: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let x2 = x * x;
    // Tail probability P(T > |x|) = I_{nu/(nu+x^2)}(nu/2, 1/2) / 2.
    let (z, zc) = if x2 < nu {
        let zc = x2 / (nu + x2);
        (1.0 - zc, zc)
    } else {
        let z = nu / (nu + x2);
        (z, 1.0 - z)
    };
    let tail = 0.5 * beta_inc_complement(0.5 * nu, 0.5, z, zc);
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Student t quantile: Hill's approximation polished by Newton steps.
pub fn t_quantile(p: f64, nu: f64) -> f64 {
    if p.is_nan() || nu.is_nan() {
        return f64::NAN;
    }
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let lower = p < 0.5;
    // Work with the lower tail probability `pl` and return a negative quantile.
    let pl = if lower { p } else { 1.0 - p };
    let mut x = -hill_abs_quantile(2.0 * pl, nu);
    if !x.is_finite() || x >= 0.0 {
        x = norm_quantile(pl).min(-1e-3);
    }
    if pl > 0.1 {
        for _ in 0..50 {
            let f = t_cdf(x, nu) - pl;
            let d = t_pdf(x, nu);
            if d <= 0.0 || !d.is_finite() {
                break;
            }
            let mut step = f / d;
            if x - step >= 0.0 {
                step = 0.5 * x;
            }
            x -= step;
            if step.abs() <= 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
    } else {
        // Newton on ln F against ln|x|, which is close to linear in the tail.
        let target = pl.ln();
        let mut y = (-x).ln();
        for _ in 0..100 {
            let xv = -y.exp();
            let cdf = t_cdf(xv, nu);
            let d = t_pdf(xv, nu);
            if cdf <= 0.0 || d <= 0.0 || !d.is_finite() {
                break;
            }
            let slope = d * xv / cdf;
            let step = ((cdf.ln() - target) / slope).clamp(-2.0, 2.0);
            y -= step;
            if step.abs() <= 1e-15 * y.abs().max(1.0) {
                break;
            }
        }
        x = -y.exp();
    }
    if lower {
        x
    } else {
        -x
    }
}

/// Hill (1970) approximation to the two-sided t quantile: returns `q > 0`
/// with `P(|T| > q) = p2`.
fn hill_abs_quantile(p2: f64, nu: f64) -> f64 {
    if (nu - 1.0).abs() < 1e-12 {
        let a = p2 * PI * 0.5;
        return a.cos() / a.sin();
    }
    if (nu - 2.0).abs() < 1e-12 {
        return (2.0 / (p2 * (2.0 - p2)) - 2.0).sqrt();
    }
    let a = 1.0 / (nu - 0.5);
    let b = 48.0 / (a * a);
    let mut c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
    let d = ((94.5 / (b + c) - 3.0) / b + 1.0) * (a * PI * 0.5).sqrt() * nu;
    let x = d * p2;
    let mut y = x.powf(2.0 / nu);
    if y > 0.05 + a {
        let x = norm_quantile(0.5 * p2);
        y = x * x;
        if nu < 5.0 {
            c += 0.3 * (nu - 4.5) * (x + 0.6);
        }
        c = (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b + c;
        y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) * x;
        y = (a * y * y).exp_m1();
    } else {
        y = ((1.0 / (((nu + 6.0) / (nu * y) - 0.089 * d - 0.822) * (nu + 2.0) * 3.0)
            + 0.5 / (nu + 4.0))
            * y
            - 1.0)
            * (nu + 1.0)
            / (nu + 2.0)
            + 1.0 / y;
    }
    (nu * y).sqrt()
}

/// Bivariate standard normal upper orthant probability `P(X > h, Y > k)`
/// with correlation `r` (Genz's BVND, Drezner–Wesolowsky with refinements).
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::NEG_INFINITY && k == f64::NEG_INFINITY {
        return 1.0;
    }
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return norm_cdf(-k);
    }
    if k == f64::NEG_INFINITY {
        return norm_cdf(-h);
    }
    let ar = r.abs();
    let n = if ar < 0.3 {
        6
    } else if ar < 0.75 {
        12
    } else {
        20
    };
    let rule = GaussLegendre::new(n);
    let two_pi = 2.0 * PI;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if ar < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let sn = (asr * (x + 1.0) * 0.5).sin();
            bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        bvn = bvn * asr / (2.0 * two_pi) + norm_cdf(-h) * norm_cdf(-k);
        return bvn.clamp(0.0, 1.0);
    }
    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if ar < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -(bs / as_ + hk) / 2.0;
        if asr > -100.0 {
            bvn = a
                * asr.exp()
                * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        }
        if -hk < 100.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp()
                * two_pi.sqrt()
                * norm_cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        let mut acc = 0.0;
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let xs = (a * (x + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let asr = -(bs / xs + hk) / 2.0;
            if asr > -100.0 {
                acc += w
                    * asr.exp()
                    * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                        - (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn += a * acc;
        bvn = -bvn / two_pi;
    }
    if r > 0.0 {
        bvn += norm_cdf(-h.max(k));
    } else {
        bvn = -bvn;
        if k > h {
            if h < 0.0 {
                bvn += norm_cdf(k) - norm_cdf(h);
            } else {
                bvn += norm_cdf(-h) - norm_cdf(-k);
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// Bivariate standard normal distribution function `P(X <= x, Y <= y)`.
#[inline]
pub fn bvn_cdf(x: f64, y: f64, r: f64) -> f64 {
    bvn_upper(-x, -y, r)
}
