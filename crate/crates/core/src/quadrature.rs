//! Numerical integration rules.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes on `[-1, 1]`, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Integral of `f` over the rectangle `[a0, a1] x [b0, b1]` by the tensor rule.
    pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
        &self,
        (a0, a1): (f64, f64),
        (b0, b1): (f64, f64),
        mut f: F,
    ) -> f64 {
        let mut total = 0.0;
        for (x, wx) in self.mapped(a0, a1) {
            let mut row = 0.0;
            for (y, wy) in self.mapped(b0, b1) {
                row += wy * f(x, y);
            }
            total += wx * row;
        }
        total
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tanh–sinh (double exponential) quadrature on a finite interval.
///
/// The integrand receives the abscissa together with its distances to the
/// left and right endpoints, computed without cancellation, so integrands
/// with endpoint singularities can be evaluated accurately.
pub fn tanh_sinh<F>(a: f64, b: f64, tol: f64, mut f: F) -> f64
where
    F: FnMut(f64, f64, f64) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mut eval = |t: f64| -> f64 {
        let s = 0.5 * PI * t.sinh();
        let c = 0.5 * PI * t.cosh();
        let e = (-2.0 * s.abs()).exp();
        // 1 - tanh(|s|) = 2 e / (1 + e)
        let one_minus = 2.0 * e / (1.0 + e);
        let cosh_s = (s.abs()).cosh();
        let w = c / (cosh_s * cosh_s);
        if w == 0.0 || !w.is_finite() || one_minus == 0.0 {
            return 0.0;
        }
        let (x, dl, dr) = if s >= 0.0 {
            let dr = half * one_minus;
            (b - dr, b - a - dr, dr)
        } else {
            let dl = half * one_minus;
            (a + dl, dl, b - a - dl)
        };
        let v = f(x, dl, dr);
        if v.is_finite() {
            half * w * v
        } else {
            0.0
        }
    };
    let t_max = 4.0;
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > t_max {
            break;
        }
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = h * sum;
    for _level in 0..8 {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            add += eval(t) + eval(-t);
            k += 2;
        }
        sum += add;
        let next = h * sum;
        let diff = (next - estimate).abs();
        estimate = next;
        if diff <= tol * estimate.abs().max(1e-300) {
            break;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(7);
        // degree 13 polynomial on [0, 2]
        let exact = 2f64.powi(14) / 14.0;
        assert_relative_eq!(rule.integrate(0.0, 2.0, |x| x.powi(13)), exact, max_relative = 1e-13);
        let w: f64 = rule.weights().iter().sum();
        assert_relative_eq!(w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn gauss_legendre_large_rule_is_accurate() {
        let rule = GaussLegendre::new(64);
        assert_relative_eq!(rule.integrate(0.0, PI, f64::sin), 2.0, max_relative = 1e-14);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tensor_rule_on_rectangle() {
        let rule = GaussLegendre::new(10);
        let v = rule.integrate_2d((0.0, 1.0), (0.0, 2.0), |x, y| x * y * y);
        assert_relative_eq!(v, 0.5 * 8.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let v = tanh_sinh(0.0, 1.0, 1e-14, |_, dl, _| 1.0 / dl.sqrt());
        assert_relative_eq!(v, 2.0, max_relative = 1e-10);
        let v = tanh_sinh(0.0, 1.0, 1e-14, |_, dl, dr| (dl * dr).ln());
        assert_relative_eq!(v, -2.0, max_relative = 1e-10);
    }
}
