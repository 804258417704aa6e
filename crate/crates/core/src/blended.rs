//! The blended density `c* = [π c_t + (1 - π) c_b] / K`, its margins and the
//! copula it induces.
//!
//! All integrals are rewritten by parts so that only conditional distribution
//! functions and CDFs of the components appear. These are bounded, so the
//! quadrature can run over the whole unit square without the corner
//! singularities of the densities.

use rayon::prelude::*;

use crate::copula::{clamp_unit, CopulaFamily, EPS_CLAMP};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::spline::MonotoneHermite;
use crate::weighting::WeightingFunction;

/// Logit range covered by the inner integrals; matches the evaluation clamp.
const Z_MAX: f64 = 23.025_850_929_940_457; // ln(1e10)

/// Geometric grid points added near each end of the marginal grid.
const GEOMETRIC_POINTS: usize = 15;

/// Numerical settings for the blended model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per panel of the inner integrals.
    pub nodes: usize,
    /// Inset from 0 and 1 of the outermost regular marginal grid points.
    pub eps: f64,
    /// Number of marginal grid points (and spline knots).
    pub spline_points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes: 64, eps: 1e-6, spline_points: 200 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::Domain(format!("quadrature needs at least 16 nodes, got {}", self.nodes)));
        }
        if !(self.eps > 0.0 && self.eps < 1e-3) {
            return Err(Error::Domain(format!("quadrature inset must lie in (0, 1e-3), got {}", self.eps)));
        }
        if self.spline_points < 2 * GEOMETRIC_POINTS + 20 {
            return Err(Error::Domain(format!(
                "spline grid needs at least {} points, got {}",
                2 * GEOMETRIC_POINTS + 20,
                self.spline_points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    U,
    V,
}

#[inline]
fn logistic(z: f64) -> (f64, f64) {
    // (t, 1 - t) without cancellation
    if z >= 0.0 {
        let e = (-z).exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    } else {
        let e = z.exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    }
}

#[inline]
fn logit(t: f64) -> f64 {
    (t / (1.0 - t)).ln()
}

/// Local abscissae of the interpolation nodes on `[-1, 1]`: the two interval
/// ends and the four Gauss–Legendre nodes.
struct IntervalBasis {
    gl4: [f64; 4],
    gl4_w: [f64; 4],
    nodes: [f64; 6],
    bary: [f64; 6],
    gl3: [f64; 3],
    gl3_w: [f64; 3],
}

impl IntervalBasis {
    fn new() -> Self {
        let r4 = GaussLegendre::new(4);
        let r3 = GaussLegendre::new(3);
        let gl4 = [r4.nodes()[0], r4.nodes()[1], r4.nodes()[2], r4.nodes()[3]];
        let nodes = [-1.0, gl4[0], gl4[1], gl4[2], gl4[3], 1.0];
        let mut bary = [1.0; 6];
        for j in 0..6 {
            for k in 0..6 {
                if j != k {
                    bary[j] /= nodes[j] - nodes[k];
                }
            }
        }
        Self {
            gl4,
            gl4_w: [r4.weights()[0], r4.weights()[1], r4.weights()[2], r4.weights()[3]],
            nodes,
            bary,
            gl3: [r3.nodes()[0], r3.nodes()[1], r3.nodes()[2]],
            gl3_w: [r3.weights()[0], r3.weights()[1], r3.weights()[2]],
        }
    }

    /// Barycentric interpolation of the six values at local coordinate `s`.
    fn interpolate(&self, values: &[f64; 6], s: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..6 {
            let d = s - self.nodes[j];
            if d == 0.0 {
                return values[j];
            }
            let w = self.bary[j] / d;
            num += w * values[j];
            den += w;
        }
        num / den
    }
}

/// Marginal density and distribution function of one coordinate of `c*`,
/// tabulated on a grid and stored unnormalised (`g = K f`).
#[derive(Debug, Clone)]
struct MarginalGrid {
    x: Vec<f64>,
    /// Six interpolation values per interval: ends plus interior nodes.
    g: Vec<[f64; 6]>,
    cum: Vec<f64>,
    suffix: Vec<f64>,
    total: f64,
    k_t: f64,
    k_b: f64,
    inverse: MonotoneHermite,
    lower: EndTable,
    upper: EndTable,
}

/// `g` on an end interval as a function of `y = ln d`, where `d` is the
/// distance to the nearest edge. Below `d = EPS_CLAMP` the density is flat.
#[derive(Debug, Clone)]
struct EndTable {
    y: Vec<f64>,
    g: Vec<[f64; 6]>,
    /// Mass between the edge and `e^{y_j}`.
    mass: Vec<f64>,
}

const END_PANELS: usize = 12;

impl EndTable {
    fn knots(eps: f64) -> Vec<f64> {
        let (y0, y1) = (EPS_CLAMP.ln(), eps.ln());
        (0..=END_PANELS).map(|j| y0 + (y1 - y0) * j as f64 / END_PANELS as f64).collect()
    }

    /// Evaluation distances in build order: knots, then four nodes per panel.
    fn distances(eps: f64) -> Vec<f64> {
        let basis = IntervalBasis::shared();
        let y = Self::knots(eps);
        let mut d: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        for j in 0..END_PANELS {
            for s in basis.gl4 {
                d.push((0.5 * (y[j] + y[j + 1]) + 0.5 * (y[j + 1] - y[j]) * s).exp());
            }
        }
        d
    }

    fn from_values(eps: f64, vals: &[f64]) -> Self {
        let basis = IntervalBasis::shared();
        let y = Self::knots(eps);
        let k = y.len();
        let mut g = Vec::with_capacity(END_PANELS);
        let mut mass = vec![EPS_CLAMP * vals[0]; k];
        for j in 0..END_PANELS {
            let mut panel = [0.0; 6];
            panel[0] = vals[j];
            panel[5] = vals[j + 1];
            let half = 0.5 * (y[j + 1] - y[j]);
            let mut acc = 0.0;
            for i in 0..4 {
                panel[i + 1] = vals[k + 4 * j + i];
                let yy = 0.5 * (y[j] + y[j + 1]) + half * basis.gl4[i];
                acc += half * basis.gl4_w[i] * panel[i + 1] * yy.exp();
            }
            g.push(panel);
            mass[j + 1] = mass[j] + acc;
        }
        Self { y, g, mass }
    }

    fn panel(&self, yy: f64) -> usize {
        (self.y.partition_point(|&p| p <= yy).max(1) - 1).min(self.y.len() - 2)
    }

    fn g(&self, d: f64) -> f64 {
        if d <= EPS_CLAMP {
            return self.g[0][0];
        }
        let yy = d.ln();
        let j = self.panel(yy);
        let (lo, hi) = (self.y[j], self.y[j + 1]);
        IntervalBasis::shared().interpolate(&self.g[j], (2.0 * yy - lo - hi) / (hi - lo))
    }

    /// Mass between the edge and distance `d`.
    fn mass(&self, d: f64) -> f64 {
        if d <= EPS_CLAMP {
            return d * self.g[0][0];
        }
        let yy = d.ln();
        let j = self.panel(yy);
        let (lo, hi) = (self.y[j], self.y[j + 1]);
        let basis = IntervalBasis::shared();
        let half = 0.5 * (yy - lo);
        let mut acc = 0.0;
        for i in 0..4 {
            let t = 0.5 * (lo + yy) + half * basis.gl4[i];
            let s = (2.0 * t - lo - hi) / (hi - lo);
            acc += half * basis.gl4_w[i] * basis.interpolate(&self.g[j], s) * t.exp();
        }
        self.mass[j] + acc
    }
}

/// Marginal grid: 0, geometric points towards 0, a uniform middle, the mirror
/// image near 1, and 1.
fn grid_points(spec: &QuadratureSpec) -> Vec<f64> {
    let m_uniform = spec.spline_points - 1 - 2 * GEOMETRIC_POINTS;
    let first = 1.0 / m_uniform as f64;
    let ratio = (first / spec.eps).powf(1.0 / GEOMETRIC_POINTS as f64);
    let lower: Vec<f64> = (0..GEOMETRIC_POINTS).map(|j| spec.eps * ratio.powi(j as i32)).collect();
    let mut x = Vec::with_capacity(spec.spline_points);
    x.push(0.0);
    x.extend(lower.iter().copied());
    x.extend((1..m_uniform).map(|k| k as f64 / m_uniform as f64));
    x.extend(lower.iter().rev().map(|&e| 1.0 - e));
    x.push(1.0);
    x
}

#[derive(Debug, Clone)]
pub struct BlendedModel {
    tail: CopulaFamily,
    body: CopulaFamily,
    weight: WeightingFunction,
    quad: QuadratureSpec,
    k: f64,
    k_t: f64,
    k_b: f64,
    rule: Vec<(f64, f64)>,
    u_grid: MarginalGrid,
    /// `None` when the model is symmetric and the V margin equals the U margin.
    v_grid: Option<MarginalGrid>,
}

impl BlendedModel {
    /// Builds the model and all cached numerical artefacts.
    pub fn new(
        tail: CopulaFamily,
        body: CopulaFamily,
        weight: WeightingFunction,
        quad: QuadratureSpec,
    ) -> Result<Self> {
        quad.validate()?;
        weight.validate()?;
        let rule = GaussLegendre::new(quad.nodes);
        let rule: Vec<(f64, f64)> = rule.nodes().iter().copied().zip(rule.weights().iter().copied()).collect();
        let mut model = Self {
            tail,
            body,
            weight,
            quad,
            k: f64::NAN,
            k_t: f64::NAN,
            k_b: f64::NAN,
            rule,
            u_grid: MarginalGrid {
                x: Vec::new(),
                g: Vec::new(),
                cum: Vec::new(),
                suffix: Vec::new(),
                total: f64::NAN,
                k_t: f64::NAN,
                k_b: f64::NAN,
                inverse: MonotoneHermite::new(vec![0.0, 1.0], vec![0.0, 1.0])?,
                lower: EndTable { y: Vec::new(), g: Vec::new(), mass: Vec::new() },
                upper: EndTable { y: Vec::new(), g: Vec::new(), mass: Vec::new() },
            },
            v_grid: None,
        };
        model.u_grid = model.build_grid(Axis::U)?;
        let symmetric =
            weight.is_symmetric() && tail.tag().is_exchangeable() && body.tag().is_exchangeable();
        if !symmetric {
            model.v_grid = Some(model.build_grid(Axis::V)?);
        }
        model.k_t = model.u_grid.k_t;
        model.k_b = model.u_grid.k_b;
        model.k = model.k_t + model.k_b;
        if !(model.k > 0.0 && model.k.is_finite()) {
            return Err(Error::Evaluation { quantity: "normalising constant", u: f64::NAN, v: f64::NAN });
        }
        Ok(model)
    }

    pub fn with_defaults(tail: CopulaFamily, body: CopulaFamily, weight: WeightingFunction) -> Result<Self> {
        Self::new(tail, body, weight, QuadratureSpec::default())
    }

    pub fn tail(&self) -> &CopulaFamily {
        &self.tail
    }
    pub fn body(&self) -> &CopulaFamily {
        &self.body
    }
    pub fn weight(&self) -> &WeightingFunction {
        &self.weight
    }
    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    /// `(K, K_t, K_b)`.
    pub fn normalising_constants(&self) -> (f64, f64, f64) {
        (self.k, self.k_t, self.k_b)
    }

    /// Identical components: `c*` is the component copula itself.
    fn collapsed(&self) -> bool {
        self.tail == self.body
    }

    fn grid(&self, axis: Axis) -> &MarginalGrid {
        match axis {
            Axis::U => &self.u_grid,
            Axis::V => self.v_grid.as_ref().unwrap_or(&self.u_grid),
        }
    }

    /// Unnormalised blended density `π c_t + (1 - π) c_b`.
    fn mixture(&self, a: f64, b: f64) -> f64 {
        let p = self.weight.value(a, b);
        p * self.tail.pdf(a, b) + (1.0 - p) * self.body.pdf(a, b)
    }

    /// The blended density `c*(u*, v*)`.
    pub fn cstar_density(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        self.mixture(u, v) / self.k
    }

    /// Gauss–Legendre nodes over `[z0, z1]` in logit coordinates, returned as
    /// `(t, weight in t)`.
    fn logit_nodes(&self, z0: f64, z1: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (z1 - z0);
        let mid = 0.5 * (z0 + z1);
        self.rule.iter().map(move |&(s, w)| {
            let (t, tc) = logistic(mid + half * s);
            (t, half * w * t * tc)
        })
    }

    /// Logit panels over `[z0, z1]` split at the given interior points.
    fn panels(z0: f64, z1: f64, splits: &[f64]) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = splits.iter().copied().filter(|&z| z > z0 + 1e-9 && z < z1 - 1e-9).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 0.25);
        let mut out = Vec::with_capacity(cuts.len() + 1);
        let mut lo = z0;
        for c in cuts {
            out.push((lo, c));
            lo = c;
        }
        out.push((lo, z1));
        out
    }

    /// Integral over `t ∈ (lo, hi)` of `f(t)` by logit panels split near `x` and `1 - x`.
    fn integrate_line<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, x: f64, mut f: F) -> f64 {
        let z0 = if lo <= EPS_CLAMP { -Z_MAX } else { logit(lo) };
        let z1 = if hi >= 1.0 - EPS_CLAMP { Z_MAX } else { logit(hi) };
        if z1 <= z0 {
            return 0.0;
        }
        let zx = logit(clamp_unit(x));
        let mut total = 0.0;
        for (a, b) in Self::panels(z0, z1, &[zx, -zx]) {
            for (t, w) in self.logit_nodes(a, b) {
                total += w * f(t);
            }
        }
        total
    }

    /// `(∫ π_v h_t dt, ∫ π_v h_b dt)` along the line `u = x` (axis U) or the
    /// analogue with the roles of the coordinates swapped (axis V).
    fn line_integrals(&self, axis: Axis, x: f64) -> (f64, f64) {
        let x = clamp_unit(x);
        let mut it = 0.0;
        let mut ib = 0.0;
        let zx = logit(x);
        for (a, b) in Self::panels(-Z_MAX, Z_MAX, &[zx, -zx]) {
            for (t, w) in self.logit_nodes(a, b) {
                let (dp, ht, hb) = match axis {
                    Axis::U => (self.weight.dv(x, t), self.tail.cond_u(x, t), self.body.cond_u(x, t)),
                    Axis::V => (self.weight.du(t, x), self.tail.cond_v(t, x), self.body.cond_v(t, x)),
                };
                it += w * dp * ht;
                ib += w * dp * hb;
            }
        }
        (it, ib)
    }

    /// Contributions `(k_t(x), k_b(x))` whose sum is `g(x) = K f(x)`.
    fn marginal_parts(&self, axis: Axis, x: f64) -> (f64, f64) {
        let xc = clamp_unit(x);
        let edge = match axis {
            Axis::U => self.weight.value(xc, 1.0),
            Axis::V => self.weight.value(1.0, xc),
        };
        if self.tail == self.body {
            return (edge, 1.0 - edge);
        }
        let (it, ib) = self.line_integrals(axis, xc);
        (edge - it, 1.0 - edge + ib)
    }

    fn build_grid(&self, axis: Axis) -> Result<MarginalGrid> {
        let basis = IntervalBasis::new();
        let x = grid_points(&self.quad);
        let intervals = x.len() - 1;
        // Every evaluation point: grid points, then four interior nodes per interval.
        let mut points = x.clone();
        for i in 0..intervals {
            let (lo, hi) = (x[i], x[i + 1]);
            for s in basis.gl4 {
                points.push(0.5 * (lo + hi) + 0.5 * (hi - lo) * s);
            }
        }
        let n_main = points.len();
        let ends = EndTable::distances(self.quad.eps);
        points.extend(ends.iter().copied());
        points.extend(ends.iter().map(|d| 1.0 - d));
        let parts: Vec<(f64, f64)> = points.par_iter().map(|&p| self.marginal_parts(axis, p)).collect();
        if let Some(i) = parts.iter().position(|(a, b)| !(a.is_finite() && b.is_finite())) {
            return Err(Error::Evaluation { quantity: "marginal integrand", u: points[i], v: f64::NAN });
        }
        let m = x.len();
        let mut g = Vec::with_capacity(intervals);
        let mut piece = Vec::with_capacity(intervals);
        let (mut k_t, mut k_b) = (0.0, 0.0);
        for i in 0..intervals {
            let half = 0.5 * (x[i + 1] - x[i]);
            let inner = &parts[m + 4 * i..m + 4 * i + 4];
            let mut vals = [0.0; 6];
            vals[0] = parts[i].0 + parts[i].1;
            vals[5] = parts[i + 1].0 + parts[i + 1].1;
            let mut acc = 0.0;
            for j in 0..4 {
                vals[j + 1] = inner[j].0 + inner[j].1;
                let w = half * basis.gl4_w[j];
                acc += w * vals[j + 1];
                k_t += w * inner[j].0;
                k_b += w * inner[j].1;
            }
            g.push(vals);
            piece.push(acc);
        }
        let sums: Vec<f64> = parts[n_main..].iter().map(|(a, b)| a + b).collect();
        let lower = EndTable::from_values(self.quad.eps, &sums[..ends.len()]);
        let upper = EndTable::from_values(self.quad.eps, &sums[ends.len()..]);
        piece[0] = *lower.mass.last().unwrap();
        piece[intervals - 1] = *upper.mass.last().unwrap();
        let mut cum = vec![0.0; m];
        for i in 0..intervals {
            cum[i + 1] = cum[i] + piece[i];
        }
        let mut suffix = vec![0.0; m];
        for i in (0..intervals).rev() {
            suffix[i] = suffix[i + 1] + piece[i];
        }
        let total = cum[m - 1];
        let q: Vec<f64> = cum.iter().map(|c| c / total).collect();
        let slopes: Vec<f64> = (0..m)
            .map(|i| {
                let gi = if i < intervals { g[i][0] } else { g[intervals - 1][5] };
                total / gi
            })
            .collect();
        let inverse = MonotoneHermite::with_slopes(q, x.clone(), slopes)?;
        Ok(MarginalGrid { x, g, cum, suffix, total, k_t, k_b, inverse, lower, upper })
    }

    fn locate(grid: &MarginalGrid, x: f64) -> usize {
        (grid.x.partition_point(|&p| p <= x).max(1) - 1).min(grid.x.len() - 2)
    }

    /// Unnormalised marginal density `g = K f` at `x`.
    fn g_at(&self, axis: Axis, x: f64) -> f64 {
        let grid = self.grid(axis);
        let i = Self::locate(grid, x);
        let last = grid.x.len() - 2;
        if i == 0 {
            return grid.lower.g(x);
        }
        if i == last {
            return grid.upper.g(1.0 - x);
        }
        let (lo, hi) = (grid.x[i], grid.x[i + 1]);
        let s = (2.0 * x - lo - hi) / (hi - lo);
        IntervalBasis::shared().interpolate(&grid.g[i], s)
    }

    /// Integral of the interpolated `g` over `[a, b]` inside interval `i`.
    fn g_piece(&self, grid: &MarginalGrid, i: usize, a: f64, b: f64) -> f64 {
        let basis = IntervalBasis::shared();
        let (lo, hi) = (grid.x[i], grid.x[i + 1]);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for j in 0..3 {
            let t = 0.5 * (a + b) + half * basis.gl3[j];
            let s = (2.0 * t - lo - hi) / (hi - lo);
            acc += half * basis.gl3_w[j] * basis.interpolate(&grid.g[i], s);
        }
        acc
    }

    /// `f_{U*}(x)` or `f_{V*}(x)`.
    pub fn marginal_pdf(&self, axis: Axis, x: f64) -> f64 {
        if self.collapsed() {
            return 1.0;
        }
        self.g_at(axis, x.clamp(0.0, 1.0)) / self.grid(axis).total
    }

    /// `F_{U*}(x)` or `F_{V*}(x)`.
    pub fn marginal_cdf(&self, axis: Axis, x: f64) -> f64 {
        if self.collapsed() {
            return x.clamp(0.0, 1.0);
        }
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let grid = self.grid(axis);
        let i = Self::locate(grid, x);
        if i == 0 {
            return grid.lower.mass(x) / grid.total;
        }
        if i == grid.x.len() - 2 {
            return 1.0 - self.marginal_survival(axis, x);
        }
        (grid.cum[i] + self.g_piece(grid, i, grid.x[i], x)) / grid.total
    }

    /// `1 - F(x)`, accurate when it is tiny.
    pub fn marginal_survival(&self, axis: Axis, x: f64) -> f64 {
        if self.collapsed() {
            return 1.0 - x.clamp(0.0, 1.0);
        }
        if x <= 0.0 {
            return 1.0;
        }
        if x >= 1.0 {
            return 0.0;
        }
        let grid = self.grid(axis);
        let i = Self::locate(grid, x);
        if i == grid.x.len() - 2 {
            return grid.upper.mass(1.0 - x) / grid.total;
        }
        if i == 0 {
            return 1.0 - self.marginal_cdf(axis, x);
        }
        (grid.suffix[i + 1] + self.g_piece(grid, i, x, grid.x[i + 1])) / grid.total
    }

    /// `F^{-1}(q)` from the monotone spline, with root finding outside the
    /// spline's reliable range.
    pub fn marginal_quantile(&self, axis: Axis, q: f64) -> Result<f64> {
        if self.collapsed() && q > 0.0 && q < 1.0 {
            return Ok(q);
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {q}")));
        }
        let grid = self.grid(axis);
        let m = grid.x.len();
        let q_lo = grid.cum[1] / grid.total;
        let q_hi = grid.cum[m - 2] / grid.total;
        if q < q_lo {
            return Ok(self.solve_lower(axis, q));
        }
        if q > q_hi {
            return Ok(self.solve_upper(axis, 1.0 - q));
        }
        let x = grid.inverse.eval(q);
        let f = self.marginal_pdf(axis, x);
        if f > 0.0 {
            let step = (self.marginal_cdf(axis, x) - q) / f;
            return Ok((x - step).clamp(grid.x[1], grid.x[m - 2]));
        }
        Ok(x)
    }

    /// `x` with `1 - F(x) = p`, accurate for tiny `p`.
    pub fn marginal_upper_quantile(&self, axis: Axis, p: f64) -> Result<f64> {
        if self.collapsed() && p > 0.0 && p < 1.0 {
            return Ok(1.0 - p);
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("tail probability must lie in (0, 1), got {p}")));
        }
        let grid = self.grid(axis);
        let m = grid.x.len();
        if p < grid.suffix[m - 2] / grid.total {
            return Ok(self.solve_upper(axis, p));
        }
        if p > 0.5 {
            return self.marginal_quantile(axis, 1.0 - p);
        }
        // spline start, polished on the survival function
        let mut x = grid.inverse.eval(1.0 - p);
        for _ in 0..3 {
            let f = self.marginal_pdf(axis, x);
            if f <= 0.0 {
                break;
            }
            x = (x + (self.marginal_survival(axis, x) - p) / f).clamp(0.0, 1.0);
        }
        Ok(x)
    }

    /// Solves `F(x) = q` for `x` in the first grid interval, on a log scale.
    fn solve_lower(&self, axis: Axis, q: f64) -> f64 {
        let grid = self.grid(axis);
        let (mut lo, mut hi) = ((1e-300f64).ln(), grid.x[1].ln());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.marginal_cdf(axis, mid.exp()) < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-10 {
                break;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    /// Solves `1 - F(x) = p` for `x` in the last grid interval, on a log scale of `1 - x`.
    fn solve_upper(&self, axis: Axis, p: f64) -> f64 {
        let grid = self.grid(axis);
        let m = grid.x.len();
        let (mut lo, mut hi) = ((1e-300f64).ln(), (1.0 - grid.x[m - 2]).ln());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.marginal_survival(axis, 1.0 - mid.exp()) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-10 {
                break;
            }
        }
        1.0 - (0.5 * (lo + hi)).exp()
    }

    /// Density of the induced copula.
    pub fn pdf(&self, u: f64, v: f64) -> Result<f64> {
        if self.collapsed() {
            return self.tail.try_pdf(u, v);
        }
        let a = self.marginal_quantile(Axis::U, clamp_unit(u))?;
        let b = self.marginal_quantile(Axis::V, clamp_unit(v))?;
        Ok(self.pdf_at_margins(a, b))
    }

    /// Induced copula density at the point whose margins map to `(a, b)`.
    pub(crate) fn pdf_at_margins(&self, a: f64, b: f64) -> f64 {
        let gu = self.g_at(Axis::U, a);
        let gv = self.g_at(Axis::V, b);
        let (ac, bc) = (clamp_unit(a), clamp_unit(b));
        self.mixture(ac, bc) * self.u_grid.total * self.grid(Axis::V).total / (self.k * gu * gv)
    }

    /// `P(U* ≤ a, V* ≤ b)`.
    pub fn cstar_cdf(&self, a: f64, b: f64) -> f64 {
        if a <= 0.0 || b <= 0.0 {
            return 0.0;
        }
        if a >= 1.0 && b >= 1.0 {
            return 1.0;
        }
        if a >= 1.0 {
            return self.marginal_cdf(Axis::V, b);
        }
        if b >= 1.0 {
            return self.marginal_cdf(Axis::U, a);
        }
        let (t, bo, w) = (&self.tail, &self.body, &self.weight);
        let d = |s: f64, r: f64| t.cdf(s, r) - bo.cdf(s, r);
        let mut total = bo.cdf(a, b);
        if self.tail != self.body {
            total += w.value(a, b) * d(a, b);
            total -= self.integrate_line(0.0, a, b, |s| w.du(s, b) * d(s, b));
            total -= self.integrate_line(0.0, b, a, |r| w.dv(a, r) * d(a, r));
            total += self.integrate_rect((0.0, a), (0.0, b), |s, r| w.duv(s, r) * d(s, r));
        }
        (total / self.k).clamp(0.0, a.min(b))
    }

    /// `P(U* > a, V* > b)`.
    pub fn cstar_survival(&self, a: f64, b: f64) -> f64 {
        if a >= 1.0 || b >= 1.0 {
            return 0.0;
        }
        if a <= 0.0 && b <= 0.0 {
            return 1.0;
        }
        if a <= 0.0 {
            return self.marginal_survival(Axis::V, b);
        }
        if b <= 0.0 {
            return self.marginal_survival(Axis::U, a);
        }
        let (t, bo, w) = (&self.tail, &self.body, &self.weight);
        let d = |s: f64, r: f64| t.survival(s, r) - bo.survival(s, r);
        let mut total = bo.survival(a, b);
        if self.tail != self.body {
            total += w.value(a, b) * d(a, b);
            total += self.integrate_line(a, 1.0, b, |s| w.du(s, b) * d(s, b));
            total += self.integrate_line(b, 1.0, a, |r| w.dv(a, r) * d(a, r));
            total += self.integrate_rect((a, 1.0), (b, 1.0), |s, r| w.duv(s, r) * d(s, r));
        }
        (total / self.k).clamp(0.0, (1.0 - a).min(1.0 - b))
    }

    /// Tensor rule in logit coordinates over a rectangle.
    fn integrate_rect<F: Fn(f64, f64) -> f64 + Sync>(&self, (a0, a1): (f64, f64), (b0, b1): (f64, f64), f: F) -> f64 {
        let to_z = |t: f64| {
            if t <= EPS_CLAMP {
                -Z_MAX
            } else if t >= 1.0 - EPS_CLAMP {
                Z_MAX
            } else {
                logit(t)
            }
        };
        let (za0, za1, zb0, zb1) = (to_z(a0), to_z(a1), to_z(b0), to_z(b1));
        if za1 <= za0 || zb1 <= zb0 {
            return 0.0;
        }
        let outer: Vec<(f64, f64)> = self.logit_nodes(za0, za1).collect();
        let inner: Vec<(f64, f64)> = self.logit_nodes(zb0, zb1).collect();
        let rows: Vec<f64> = outer
            .par_iter()
            .map(|&(s, ws)| ws * inner.iter().map(|&(r, wr)| wr * f(s, r)).sum::<f64>())
            .collect();
        rows.iter().sum()
    }

    /// Distribution function of the induced copula.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        if u <= 0.0 || v <= 0.0 {
            return Ok(0.0);
        }
        let a = if u >= 1.0 { 1.0 } else { self.marginal_quantile(Axis::U, u)? };
        let b = if v >= 1.0 { 1.0 } else { self.marginal_quantile(Axis::V, v)? };
        let hi = u.min(v);
        Ok(self.cstar_cdf(a, b).clamp((u + v - 1.0).max(0.0).min(hi), hi))
    }

    /// Joint survival function of the induced copula, `P(U > u, V > v)`,
    /// accurate when it is tiny.
    pub fn survival(&self, u: f64, v: f64) -> Result<f64> {
        if u >= 1.0 || v >= 1.0 {
            return Ok(0.0);
        }
        let a = if u <= 0.0 { 0.0 } else { self.marginal_upper_quantile(Axis::U, 1.0 - u)? };
        let b = if v <= 0.0 { 0.0 } else { self.marginal_upper_quantile(Axis::V, 1.0 - v)? };
        let (ub, vb) = (1.0 - u, 1.0 - v);
        let hi = ub.min(vb);
        Ok(self.cstar_survival(a, b).clamp((ub + vb - 1.0).max(0.0).min(hi), hi))
    }

    /// `∂C*/∂a` and `∂C*/∂b` at `(a, b)`.
    pub(crate) fn cstar_partials(&self, a: f64, b: f64) -> (f64, f64) {
        let (t, bo, w) = (&self.tail, &self.body, &self.weight);
        let mut du = bo.cond_u(a, b);
        let mut dv = bo.cond_v(a, b);
        if self.tail != self.body {
            let p = w.value(a, b);
            du += p * (t.cond_u(a, b) - bo.cond_u(a, b));
            dv += p * (t.cond_v(a, b) - bo.cond_v(a, b));
            du -= self.integrate_line(0.0, b, a, |r| w.dv(a, r) * (t.cond_u(a, r) - bo.cond_u(a, r)));
            dv -= self.integrate_line(0.0, a, b, |s| w.du(s, b) * (t.cond_v(s, b) - bo.cond_v(s, b)));
        }
        (du / self.k, dv / self.k)
    }

    /// Kendall's tau by quadrature of `1 - 4 ∫∫ ∂_a C* ∂_b C*`.
    pub fn kendall_tau_quadrature(&self) -> f64 {
        let nodes: Vec<(f64, f64)> = self.logit_nodes(-Z_MAX, 0.0).chain(self.logit_nodes(0.0, Z_MAX)).collect();
        let rows: Vec<f64> = nodes
            .par_iter()
            .map(|&(a, wa)| {
                wa * nodes
                    .iter()
                    .map(|&(b, wb)| {
                        let (pa, pb) = self.cstar_partials(a, b);
                        wb * pa * pb
                    })
                    .sum::<f64>()
            })
            .collect();
        1.0 - 4.0 * rows.iter().sum::<f64>()
    }
}

impl IntervalBasis {
    fn shared() -> &'static IntervalBasis {
        static BASIS: std::sync::OnceLock<IntervalBasis> = std::sync::OnceLock::new();
        BASIS.get_or_init(IntervalBasis::new)
    }
}
