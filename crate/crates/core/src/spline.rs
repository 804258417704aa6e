//! Monotone piecewise cubic Hermite interpolation (Fritsch–Carlson).

use crate::error::{Error, Result};

/// Shape-preserving cubic Hermite interpolant through increasing data.
#[derive(Debug, Clone)]
pub struct MonotoneHermite {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneHermite {
    /// Interpolant with slopes estimated from the data (three-point PCHIP formula).
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_knots(&x, &y)?;
        let n = x.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (d0, d1) = (secants[i - 1], secants[i]);
            slopes[i] = if d0 * d1 <= 0.0 {
                0.0
            } else {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                (w0 + w1) / (w0 / d0 + w1 / d1)
            };
        }
        Ok(Self::limited(x, y, slopes, &secants))
    }

    /// Interpolant with known derivatives at the knots, limited where needed
    /// so the result stays monotone.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        check_knots(&x, &y)?;
        if slopes.len() != x.len() {
            return Err(Error::Domain(format!(
                "spline needs one slope per knot ({} knots, {} slopes)",
                x.len(),
                slopes.len()
            )));
        }
        let secants: Vec<f64> = (0..x.len() - 1)
            .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
            .collect();
        Ok(Self::limited(x, y, slopes, &secants))
    }

    fn limited(x: Vec<f64>, y: Vec<f64>, mut slopes: Vec<f64>, secants: &[f64]) -> Self {
        for s in slopes.iter_mut() {
            if !s.is_finite() || *s < 0.0 {
                *s = 0.0;
            }
        }
        for (i, &d) in secants.iter().enumerate() {
            if d == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / d;
            let b = slopes[i + 1] / d;
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                slopes[i] = tau * a * d;
                slopes[i + 1] = tau * b * d;
            }
        }
        Self { x, y, slopes }
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    /// Evaluates the interpolant; arguments outside the knot range are clamped.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&xi| xi <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

fn check_knots(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::Domain(format!(
            "spline needs at least two knots with matching ordinates (got {} / {})",
            x.len(),
            y.len()
        )));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("spline abscissae must be strictly increasing".into()));
    }
    if y.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("spline ordinates must be non-decreasing".into()));
    }
    Ok(())
}
