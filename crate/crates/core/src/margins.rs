//! Semi-parametric margins: an empirical distribution function below a high
//! threshold spliced with a generalised Pareto tail above it.

use crate::copula::EPS_CLAMP;
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadSettings};
use crate::stats::percentile_sorted;

/// Smallest number of threshold exceedances accepted by [`fit_margin`].
pub const MIN_EXCEEDANCES: usize = 30;

/// Shapes closer to zero than this use the exponential limit.
const XI_ZERO: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SemiParametricMargin {
    sorted: Vec<f64>,
    // distinct values below the threshold and their average-rank CDF values
    knots: Vec<(f64, f64)>,
    threshold: f64,
    phi: f64,
    xi: f64,
    sigma: f64,
}

impl SemiParametricMargin {
    /// Builds a margin from a sample and given tail parameters.
    pub fn new(sample: &[f64], threshold: f64, phi: f64, xi: f64, sigma: f64) -> Result<Self> {
        if sample.is_empty() || sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("margin sample must be non-empty and finite".into()));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("GPD scale must be positive, got {sigma}")));
        }
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::Domain(format!("exceedance probability must lie in (0, 1), got {phi}")));
        }
        if !xi.is_finite() || !threshold.is_finite() {
            return Err(Error::Domain("threshold and GPD shape must be finite".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let denom = (sorted.len() + 1) as f64;
        let top = 1.0 - phi;
        let mut knots = Vec::new();
        let mut i = 0;
        while i < sorted.len() && sorted[i] < threshold {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            // ranks i+1..=j share their average
            let f = 0.5 * (i + 1 + j) as f64 / denom;
            knots.push((sorted[i], f.min(top)));
            i = j;
        }
        Ok(Self { sorted, knots, threshold, phi, xi, sigma })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Exceedance probability `φ_r` of the threshold.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    fn floor(&self) -> f64 {
        1.0 / (self.sorted.len() + 1) as f64
    }

    /// Upper end of the tail support, infinite unless `ξ < 0`.
    pub fn upper_endpoint(&self) -> f64 {
        if self.xi < -XI_ZERO {
            self.threshold - self.sigma / self.xi
        } else {
            f64::INFINITY
        }
    }

    /// `F(x)`. Total on the reals; the result stays in `[1/(n+1), 1 - 1e-10]`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x > self.threshold {
            if x >= self.upper_endpoint() {
                return 1.0 - EPS_CLAMP;
            }
            let t = self.tail_survival(x - self.threshold);
            return (1.0 - self.phi * t).min(1.0 - EPS_CLAMP);
        }
        let top = 1.0 - self.phi;
        if x == self.threshold {
            return top;
        }
        let floor = self.floor();
        let k = &self.knots;
        match k.first() {
            None => top,
            Some(&(x0, f0)) if x <= x0 => {
                if x == x0 {
                    f0
                } else {
                    floor.min(f0)
                }
            }
            _ => {
                let i = k.partition_point(|&(xk, _)| xk <= x);
                let (xa, fa) = k[i - 1];
                let (xb, fb) = k.get(i).copied().unwrap_or((self.threshold, top));
                if xb <= xa {
                    return fb;
                }
                fa + (fb - fa) * (x - xa) / (xb - xa)
            }
        }
    }

    /// GPD survival of an excess `y ≥ 0`.
    fn tail_survival(&self, y: f64) -> f64 {
        if self.xi.abs() < XI_ZERO {
            (-y / self.sigma).exp()
        } else {
            let z = 1.0 + self.xi * y / self.sigma;
            if z <= 0.0 {
                0.0
            } else {
                (-z.ln() / self.xi).exp()
            }
        }
    }

    /// Inverse of [`SemiParametricMargin::cdf`].
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        let top = 1.0 - self.phi;
        if p == top {
            return Ok(self.threshold);
        }
        if p > top {
            let s = (1.0 - p) / self.phi;
            let y = if self.xi.abs() < XI_ZERO {
                -self.sigma * s.ln()
            } else {
                self.sigma / self.xi * (s.powf(-self.xi) - 1.0)
            };
            return Ok(self.threshold + y);
        }
        let k = &self.knots;
        let Some(&(x0, f0)) = k.first() else {
            return Ok(self.threshold);
        };
        if p <= f0 {
            return Ok(x0);
        }
        let i = k.partition_point(|&(_, fk)| fk < p);
        let (xb, fb) = k.get(i).copied().unwrap_or((self.threshold, top));
        let (xa, fa) = k[i - 1];
        if fb <= fa {
            return Ok(xb);
        }
        Ok(xa + (xb - xa) * (p - fa) / (fb - fa))
    }

    /// Applies [`SemiParametricMargin::cdf`] to every value.
    pub fn transform(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.cdf(x)).collect()
    }
}

/// Negative GPD log-likelihood of excesses `y > 0`.
pub fn gpd_neg_loglik(excesses: &[f64], xi: f64, sigma: f64) -> f64 {
    if !(sigma > 0.0) {
        return f64::INFINITY;
    }
    let n = excesses.len() as f64;
    if xi.abs() < XI_ZERO {
        return n * sigma.ln() + excesses.iter().sum::<f64>() / sigma;
    }
    let mut s = 0.0;
    for &y in excesses {
        let z = 1.0 + xi * y / sigma;
        if z <= 0.0 {
            return f64::INFINITY;
        }
        s += z.ln();
    }
    n * sigma.ln() + (1.0 + 1.0 / xi) * s
}

/// Maximum-likelihood `(ξ, σ)` for threshold excesses, by Nelder–Mead on
/// `(ξ, log σ)`.
pub fn fit_gpd(excesses: &[f64]) -> Result<(f64, f64)> {
    if excesses.len() < 2 || excesses.iter().any(|y| !(y.is_finite() && *y >= 0.0)) {
        return Err(Error::Fit("GPD fit needs at least two finite non-negative excesses".into()));
    }
    let n = excesses.len() as f64;
    let mean = excesses.iter().sum::<f64>() / n;
    let var = excesses.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(mean > 0.0) {
        return Err(Error::Fit("all threshold excesses are zero".into()));
    }
    // method-of-moments start, shape kept inside (-0.5, 0.5)
    let xi0 = (0.5 * (1.0 - mean * mean / var)).clamp(-0.4, 0.4);
    let sigma0 = mean * (1.0 - xi0);
    let settings = NelderMeadSettings { max_evaluations: 4000, tolerance: 1e-9, initial_step: 0.1 };
    let m = nelder_mead(|p| gpd_neg_loglik(excesses, p[0], p[1].exp()), &[xi0, sigma0.ln()], &settings, |_, _| {});
    if !m.converged || !m.value.is_finite() {
        return Err(Error::Fit(format!("GPD likelihood did not converge after {} evaluations", m.evaluations)));
    }
    Ok((m.x[0], m.x[1].exp()))
}

/// Fits a margin with threshold at the empirical `q`-quantile.
pub fn fit_margin(raw: &[f64], q: f64) -> Result<SemiParametricMargin> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("threshold quantile must lie in (0, 1), got {q}")));
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("margin data contain non-finite values".into()));
    }
    let mut sorted = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = percentile_sorted(&sorted, q);
    let excesses: Vec<f64> = sorted.iter().filter(|&&x| x > r).map(|&x| x - r).collect();
    if excesses.len() < MIN_EXCEEDANCES {
        return Err(Error::Domain(format!(
            "only {} observations exceed the {q} quantile; at least {MIN_EXCEEDANCES} are needed, use a lower threshold quantile",
            excesses.len()
        )));
    }
    let phi = excesses.len() as f64 / sorted.len() as f64;
    let (xi, sigma) = fit_gpd(&excesses)?;
    SemiParametricMargin::new(&sorted, r, phi, xi, sigma)
}

/// Fits the two margins of a paired sample concurrently.
pub fn fit_margins(xs: &[f64], ys: &[f64], q: f64) -> Result<(SemiParametricMargin, SemiParametricMargin)> {
    if xs.len() != ys.len() {
        return Err(Error::Domain(format!("margin samples differ in length: {} vs {}", xs.len(), ys.len())));
    }
    let (a, b) = rayon::join(|| fit_margin(xs, q), || fit_margin(ys, q));
    Ok((a?, b?))
}
