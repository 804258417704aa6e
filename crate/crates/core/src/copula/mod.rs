//! Parametric bivariate copula families.

mod archimedean;
mod elliptical;
mod extreme;
mod sampling;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub use sampling::solve_conditional;

/// Inputs are clamped to `[EPS_CLAMP, 1 - EPS_CLAMP]` before evaluation.
pub const EPS_CLAMP: f64 = 1e-10;

#[inline]
pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP)
}

/// A point strictly inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSquarePoint {
    pub u: f64,
    pub v: f64,
}

impl UnitSquarePoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u: clamp_unit(u), v: clamp_unit(v) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    Gaussian,
    StudentT,
    Frank,
    Clayton,
    Joe,
    Gumbel,
    InvertedGumbel,
    HuslerReiss,
    Galambos,
    ColesTawn,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 10] = [
        FamilyTag::Gaussian,
        FamilyTag::StudentT,
        FamilyTag::Frank,
        FamilyTag::Clayton,
        FamilyTag::Joe,
        FamilyTag::Gumbel,
        FamilyTag::InvertedGumbel,
        FamilyTag::HuslerReiss,
        FamilyTag::Galambos,
        FamilyTag::ColesTawn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::Gaussian => "gaussian",
            FamilyTag::StudentT => "student_t",
            FamilyTag::Frank => "frank",
            FamilyTag::Clayton => "clayton",
            FamilyTag::Joe => "joe",
            FamilyTag::Gumbel => "gumbel",
            FamilyTag::InvertedGumbel => "inverted_gumbel",
            FamilyTag::HuslerReiss => "husler_reiss",
            FamilyTag::Galambos => "galambos",
            FamilyTag::ColesTawn => "coles_tawn",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            FamilyTag::Gaussian => &["rho"],
            FamilyTag::StudentT => &["rho", "nu"],
            FamilyTag::ColesTawn => &["alpha", "beta"],
            _ => &["alpha"],
        }
    }

    pub fn param_count(self) -> usize {
        self.param_names().len()
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase();
        FamilyTag::ALL.into_iter().find(|t| t.name() == key).ok_or_else(|| {
            Error::Domain(format!(
                "unknown copula family `{}`; valid families are {}",
                name.trim(),
                FamilyTag::ALL.map(|t| t.name()).join(", ")
            ))
        })
    }

    /// True when `C(u, v) = C(v, u)` for every parameter value.
    pub fn is_exchangeable(self) -> bool {
        self != FamilyTag::ColesTawn
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A copula family together with validated parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaFamily {
    tag: FamilyTag,
    params: [f64; 2],
}

impl CopulaFamily {
    pub fn new(tag: FamilyTag, params: &[f64]) -> Result<Self> {
        let name = tag.name();
        if params.len() != tag.param_count() {
            return Err(Error::params(
                name,
                format!("expected {} parameter(s), got {}", tag.param_count(), params.len()),
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::params(name, "parameters must be finite"));
        }
        let a = params[0];
        let b = params.get(1).copied().unwrap_or(0.0);
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::params(name, msg)) };
        match tag {
            FamilyTag::Gaussian => check(a.abs() < 1.0, "rho must lie in (-1, 1)")?,
            FamilyTag::StudentT => {
                check(a.abs() < 1.0, "rho must lie in (-1, 1)")?;
                check(b > 0.0, "nu must be positive")?;
            }
            FamilyTag::Frank => check(a != 0.0, "alpha must be non-zero")?,
            FamilyTag::Clayton | FamilyTag::HuslerReiss | FamilyTag::Galambos => {
                check(a > 0.0, "alpha must be positive")?
            }
            FamilyTag::Joe | FamilyTag::Gumbel | FamilyTag::InvertedGumbel => {
                check(a > 1.0, "alpha must exceed 1")?
            }
            FamilyTag::ColesTawn => {
                check(a > 0.0, "alpha must be positive")?;
                check(b > 0.0, "beta must be positive")?;
            }
        }
        Ok(Self { tag, params: [a, b] })
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Self::new(FamilyTag::Gaussian, &[rho])
    }
    pub fn student_t(rho: f64, nu: f64) -> Result<Self> {
        Self::new(FamilyTag::StudentT, &[rho, nu])
    }
    pub fn frank(alpha: f64) -> Result<Self> {
        Self::new(FamilyTag::Frank, &[alpha])
    }
    pub fn clayton(alpha: f64) -> Result<Self> {
        Self::new(FamilyTag::Clayton, &[alpha])
    }
    pub fn joe(alpha: f64) -> Result<Self> {
        Self::new(FamilyTag::Joe, &[alpha])
    }
    pub fn gumbel(alpha: f64) -> Result<Self> {
        Self::new(FamilyTag::Gumbel, &[alpha])
    }
    pub fn inverted_gumbel(alpha: f64) -> Result<Self> {
        Self::new(FamilyTag::InvertedGumbel, &[alpha])
    }
    pub fn husler_reiss(alpha: f64) -> Result<Self> {
        Self::new(FamilyTag::HuslerReiss, &[alpha])
    }
    pub fn galambos(alpha: f64) -> Result<Self> {
        Self::new(FamilyTag::Galambos, &[alpha])
    }
    pub fn coles_tawn(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(FamilyTag::ColesTawn, &[alpha, beta])
    }

    pub fn tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn params(&self) -> &[f64] {
        &self.params[..self.tag.param_count()]
    }

    /// Distribution function `C(u, v)`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let [a, b] = self.params;
        let c = match self.tag {
            FamilyTag::Gaussian => elliptical::gaussian_cdf(u, v, a),
            FamilyTag::StudentT => elliptical::t_cdf(u, v, a, b),
            FamilyTag::Frank => archimedean::frank_cdf(u, v, a),
            FamilyTag::Clayton => archimedean::clayton_cdf(u, v, a),
            FamilyTag::Joe => archimedean::joe_cdf(u, v, a),
            FamilyTag::InvertedGumbel => {
                let s = extreme::ev_cdf(FamilyTag::Gumbel, 1.0 - u, 1.0 - v, a, b);
                // u + v - 1 + C(1-u, 1-v), arranged to avoid cancellation for small u, v
                s - ((1.0 - u) - v)
            }
            _ => extreme::ev_cdf(self.tag, u, v, a, b),
        };
        c.clamp((u + v - 1.0).max(0.0).min(u.min(v)), u.min(v))
    }

    /// Joint survival function `P(U > u, V > v)`.
    pub fn survival(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let [a, b] = self.params;
        let (ub, vb) = (1.0 - u, 1.0 - v);
        let s = match self.tag {
            FamilyTag::Gaussian => elliptical::gaussian_cdf(ub, vb, a),
            FamilyTag::StudentT => elliptical::t_cdf(ub, vb, a, b),
            FamilyTag::Frank => archimedean::frank_cdf(ub, vb, a),
            FamilyTag::InvertedGumbel => extreme::ev_cdf(FamilyTag::Gumbel, ub, vb, a, b),
            FamilyTag::Clayton => archimedean::clayton_survival(u, v, a),
            FamilyTag::Joe => archimedean::joe_survival(u, v, a),
            _ => extreme::ev_survival(self.tag, u, v, a, b),
        };
        s.clamp((ub + vb - 1.0).max(0.0).min(ub.min(vb)), ub.min(vb))
    }

    /// Density `c(u, v)`.
    pub fn pdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let [a, b] = self.params;
        match self.tag {
            FamilyTag::Gaussian => elliptical::gaussian_pdf(u, v, a),
            FamilyTag::StudentT => elliptical::t_pdf(u, v, a, b),
            FamilyTag::Frank => archimedean::frank_pdf(u, v, a),
            FamilyTag::Clayton => archimedean::clayton_pdf(u, v, a),
            FamilyTag::Joe => archimedean::joe_pdf(u, v, a),
            FamilyTag::InvertedGumbel => extreme::ev_pdf(FamilyTag::Gumbel, 1.0 - u, 1.0 - v, a, b),
            _ => extreme::ev_pdf(self.tag, u, v, a, b),
        }
    }

    /// Density with an evaluation error when the result is not finite.
    pub fn try_pdf(&self, u: f64, v: f64) -> Result<f64> {
        let d = self.pdf(u, v);
        if d.is_finite() && d >= 0.0 {
            Ok(d)
        } else {
            Err(Error::Evaluation { quantity: "copula density", u, v })
        }
    }

    /// `∂C/∂u`, the distribution function of `V` given `U = u`, evaluated at `v`.
    pub fn cond_u(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let [a, b] = self.params;
        let h = match self.tag {
            FamilyTag::Gaussian => elliptical::gaussian_cond(u, v, a),
            FamilyTag::StudentT => elliptical::t_cond(u, v, a, b),
            FamilyTag::Frank => archimedean::frank_cond(u, v, a),
            FamilyTag::Clayton => archimedean::clayton_cond(u, v, a),
            FamilyTag::Joe => archimedean::joe_cond(u, v, a),
            FamilyTag::InvertedGumbel => {
                1.0 - extreme::ev_cond_u(FamilyTag::Gumbel, 1.0 - u, 1.0 - v, a, b)
            }
            _ => extreme::ev_cond_u(self.tag, u, v, a, b),
        };
        h.clamp(0.0, 1.0)
    }

    /// `∂C/∂v`, the distribution function of `U` given `V = v`, evaluated at `u`.
    pub fn cond_v(&self, u: f64, v: f64) -> f64 {
        if self.tag.is_exchangeable() {
            return self.cond_u(v, u);
        }
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let [a, b] = self.params;
        extreme::ev_cond_v(self.tag, u, v, a, b).clamp(0.0, 1.0)
    }

    /// Solves `cond_u(u, v) = p` for `v`.
    pub fn cond_u_inverse(&self, u: f64, p: f64) -> Result<f64> {
        sampling::cond_u_inverse(self, u, p)
    }

    /// Draws `n` independent points.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<UnitSquarePoint>> {
        sampling::sample(self, n, rng)
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.tag.name())?;
        for (i, p) in self.params().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

/// Splits `name(a, b, ...)` into the name and its numeric arguments.
pub(crate) fn parse_call(text: &str) -> Result<(String, Vec<f64>)> {
    let text = text.trim();
    let column_of = |sub: &str| text.find(sub).map_or(1, |i| i + 1);
    let open = text.find('(').ok_or_else(|| Error::Parse {
        line: 1,
        column: text.len() + 1,
        message: format!("expected `(` after `{text}`"),
    })?;
    if !text.ends_with(')') {
        return Err(Error::Parse {
            line: 1,
            column: text.len() + 1,
            message: "expected closing `)`".into(),
        });
    }
    let name = text[..open].trim().to_string();
    let inner = &text[open + 1..text.len() - 1];
    let mut args = Vec::new();
    if !inner.trim().is_empty() {
        for piece in inner.split(',') {
            let value: f64 = piece.trim().parse().map_err(|_| Error::Parse {
                line: 1,
                column: column_of(piece),
                message: format!("`{}` is not a number", piece.trim()),
            })?;
            args.push(value);
        }
    }
    Ok((name, args))
}

impl FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if !s.contains('(') {
            FamilyTag::from_name(s)?;
        }
        let (name, args) = parse_call(s)?;
        let tag = FamilyTag::from_name(&name)?;
        CopulaFamily::new(tag, &args)
    }
}
