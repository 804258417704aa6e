//! A fitted copula model, single or blended, and its key-value file format.
//!
//! ```text
//! # single copula
//! copula = gumbel(2)
//!
//! # blended model
//! tail = gumbel(2)
//! body = gaussian(0.6)
//! weighting = power(1.5)
//! quad_nodes = 64
//! quad_eps = 1e-6
//! spline_points = 200
//! ```

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blended::{BlendedModel, QuadratureSpec};
use crate::copula::{clamp_unit, CopulaFamily, UnitSquarePoint};
use crate::error::{Error, Result};
use crate::sampler::sample_blended_copula;
use crate::weighting::WeightingFunction;

/// Anything that can evaluate a bivariate copula distribution function.
pub trait CopulaCdf {
    fn copula_cdf(&self, u: f64, v: f64) -> Result<f64>;

    /// `P(U > u, V > v)`.
    fn copula_survival(&self, u: f64, v: f64) -> Result<f64> {
        Ok((1.0 - u - v + self.copula_cdf(u, v)?).max(0.0))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Independence;

impl CopulaCdf for Independence {
    fn copula_cdf(&self, u: f64, v: f64) -> Result<f64> {
        Ok(u.clamp(0.0, 1.0) * v.clamp(0.0, 1.0))
    }
    fn copula_survival(&self, u: f64, v: f64) -> Result<f64> {
        Ok((1.0 - u.clamp(0.0, 1.0)) * (1.0 - v.clamp(0.0, 1.0)))
    }
}

/// The upper Fréchet bound `min(u, v)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Comonotone;

impl CopulaCdf for Comonotone {
    fn copula_cdf(&self, u: f64, v: f64) -> Result<f64> {
        Ok(u.min(v).clamp(0.0, 1.0))
    }
    fn copula_survival(&self, u: f64, v: f64) -> Result<f64> {
        Ok((1.0 - u.max(v)).clamp(0.0, 1.0))
    }
}

impl CopulaCdf for CopulaFamily {
    fn copula_cdf(&self, u: f64, v: f64) -> Result<f64> {
        if u <= 0.0 || v <= 0.0 {
            return Ok(0.0);
        }
        if u >= 1.0 || v >= 1.0 {
            return Ok(u.min(v).min(1.0));
        }
        Ok(self.cdf(u, v))
    }
    fn copula_survival(&self, u: f64, v: f64) -> Result<f64> {
        if u >= 1.0 || v >= 1.0 {
            return Ok(0.0);
        }
        if u <= 0.0 || v <= 0.0 {
            return Ok(1.0 - u.max(v).max(0.0));
        }
        Ok(self.survival(u, v))
    }
}

impl CopulaCdf for BlendedModel {
    fn copula_cdf(&self, u: f64, v: f64) -> Result<f64> {
        self.cdf(u, v)
    }
    fn copula_survival(&self, u: f64, v: f64) -> Result<f64> {
        self.survival(u, v)
    }
}

#[derive(Debug, Clone)]
pub enum CopulaModel {
    Single(CopulaFamily),
    Blended(Box<BlendedModel>),
}

impl CopulaModel {
    pub fn blended(model: BlendedModel) -> Self {
        CopulaModel::Blended(Box::new(model))
    }

    /// Copula density at `(u, v)`.
    pub fn pdf(&self, u: f64, v: f64) -> Result<f64> {
        match self {
            CopulaModel::Single(f) => f.try_pdf(u, v),
            CopulaModel::Blended(m) => m.pdf(u, v),
        }
    }

    /// Number of free parameters.
    pub fn n_params(&self) -> usize {
        match self {
            CopulaModel::Single(f) => f.tag().param_count(),
            CopulaModel::Blended(m) => m.tail().tag().param_count() + m.body().tag().param_count() + 1,
        }
    }

    /// Parameters in the order `(θ, tail..., body...)` for blends.
    pub fn parameter_vector(&self) -> Vec<f64> {
        match self {
            CopulaModel::Single(f) => f.params().to_vec(),
            CopulaModel::Blended(m) => {
                let mut p = vec![m.weight().theta()];
                p.extend_from_slice(m.tail().params());
                p.extend_from_slice(m.body().params());
                p
            }
        }
    }

    /// Human-readable description, e.g. `gumbel(2)+gaussian(0.6)@power(1.5)`.
    pub fn label(&self) -> String {
        match self {
            CopulaModel::Single(f) => f.to_string(),
            CopulaModel::Blended(m) => format!("{}+{}@{}", m.tail(), m.body(), m.weight()),
        }
    }

    /// Structural label without parameter values, e.g. `gumbel+gaussian@power`.
    pub fn structure(&self) -> String {
        match self {
            CopulaModel::Single(f) => f.tag().name().to_string(),
            CopulaModel::Blended(m) => {
                format!("{}+{}@{}", m.tail().tag().name(), m.body().tag().name(), m.weight().tag())
            }
        }
    }

    /// `n` draws from the copula.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<UnitSquarePoint>> {
        match self {
            CopulaModel::Single(f) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                f.sample(n, &mut rng)
            }
            CopulaModel::Blended(m) => sample_blended_copula(m, n, seed),
        }
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        match self {
            CopulaModel::Single(f) => {
                let _ = writeln!(out, "copula = {f}");
            }
            CopulaModel::Blended(m) => {
                let q = m.quadrature();
                let _ = writeln!(out, "tail = {}", m.tail());
                let _ = writeln!(out, "body = {}", m.body());
                let _ = writeln!(out, "weighting = {}", m.weight());
                let _ = writeln!(out, "quad_nodes = {}", q.nodes);
                let _ = writeln!(out, "quad_eps = {:e}", q.eps);
                let _ = writeln!(out, "spline_points = {}", q.spline_points);
            }
        }
        out
    }

    /// Parses the key-value format written by [`CopulaModel::to_key_values`].
    /// Unknown keys are ignored so fit reports can carry extra lines.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let entries = parse_key_values(text)?;
        let get = |key: &str| entries.iter().find(|(k, _, _)| k == key).map(|(_, v, line)| (v.as_str(), *line));
        let located = |line: usize, e: Error| match e {
            Error::Parse { column, message, .. } => Error::Parse { line, column, message },
            other => other,
        };
        if let Some((spec, line)) = get("copula") {
            let f: CopulaFamily = spec.parse().map_err(|e| located(line, e))?;
            return Ok(CopulaModel::Single(f));
        }
        let need = |key: &str| {
            get(key).ok_or_else(|| Error::Parse {
                line: 0,
                column: 0,
                message: format!("missing key `{key}` (a model needs `copula`, or `tail`, `body` and `weighting`)"),
            })
        };
        let (t, lt) = need("tail")?;
        let (b, lb) = need("body")?;
        let (w, lw) = need("weighting")?;
        let tail: CopulaFamily = t.parse().map_err(|e| located(lt, e))?;
        let body: CopulaFamily = b.parse().map_err(|e| located(lb, e))?;
        let weight: WeightingFunction = w.parse().map_err(|e| located(lw, e))?;
        let mut quad = QuadratureSpec::default();
        let number = |key: &str| -> Result<Option<f64>> {
            match get(key) {
                None => Ok(None),
                Some((v, line)) => v.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                    line,
                    column: 1,
                    message: format!("`{key}` expects a number, got `{v}`"),
                }),
            }
        };
        if let Some(n) = number("quad_nodes")? {
            quad.nodes = n as usize;
        }
        if let Some(e) = number("quad_eps")? {
            quad.eps = e;
        }
        if let Some(m) = number("spline_points")? {
            quad.spline_points = m as usize;
        }
        Ok(CopulaModel::blended(BlendedModel::new(tail, body, weight, quad)?))
    }
}

impl CopulaCdf for CopulaModel {
    fn copula_cdf(&self, u: f64, v: f64) -> Result<f64> {
        match self {
            CopulaModel::Single(f) => f.copula_cdf(u, v),
            CopulaModel::Blended(m) => m.copula_cdf(u, v),
        }
    }
    fn copula_survival(&self, u: f64, v: f64) -> Result<f64> {
        match self {
            CopulaModel::Single(f) => f.copula_survival(u, v),
            CopulaModel::Blended(m) => m.copula_survival(u, v),
        }
    }
}

/// `key = value` lines; `#` starts a comment. Returns `(key, value, line)`.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let eq = line.find('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            column: line.len() + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = line[..eq].trim();
        if key.is_empty() {
            return Err(Error::Parse { line: i + 1, column: 1, message: "empty key".into() });
        }
        out.push((key.to_string(), line[eq + 1..].trim().to_string(), i + 1));
    }
    Ok(out)
}

/// Clamps both coordinates into the open unit square.
pub fn interior(p: UnitSquarePoint) -> UnitSquarePoint {
    UnitSquarePoint { u: clamp_unit(p.u), v: clamp_unit(p.v) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_key_values() {
        let m = BlendedModel::new(
            CopulaFamily::student_t(0.3141592653589793, 4.5).unwrap(),
            CopulaFamily::coles_tawn(0.1234567890123, 2.0).unwrap(),
            WeightingFunction::exp_complement(std::f64::consts::E).unwrap(),
            QuadratureSpec { nodes: 32, eps: 1e-5, spline_points: 120 },
        )
        .unwrap();
        let model = CopulaModel::blended(m);
        let back = CopulaModel::from_key_values(&model.to_key_values()).unwrap();
        assert_eq!(model.parameter_vector(), back.parameter_vector());
        assert_eq!(model.to_key_values(), back.to_key_values());
        let s = CopulaModel::Single(CopulaFamily::frank(-0.92).unwrap());
        let back = CopulaModel::from_key_values(&s.to_key_values()).unwrap();
        assert_eq!(back.parameter_vector(), vec![-0.92]);
    }

    #[test]
    fn reports_line_of_bad_entry() {
        let err = CopulaModel::from_key_values("# model\ntail = gumbel(2)\nbody = gaussian(x)\nweighting = power(1)\n")
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
        assert!(CopulaModel::from_key_values("copula = gumbel2(2)").is_err());
        assert!(CopulaModel::from_key_values("tail gumbel(2)").is_err());
    }

    #[test]
    fn reference_copulas() {
        assert_eq!(Independence.copula_cdf(0.3, 0.7).unwrap(), 0.21);
        assert!((Comonotone.copula_survival(0.3, 0.7).unwrap() - 0.3).abs() < 1e-15);
    }
}
