//! Weighting functions `π(u, v; θ)` that move mass from the body copula to the
//! tail copula towards the upper corner.

use std::fmt;
use std::str::FromStr;

use crate::copula::parse_call;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[non_exhaustive]
pub enum WeightingFunction {
    /// `(uv)^θ`
    PowerProduct { theta: f64 },
    /// `exp{-θ (1-u)(1-v)}`
    ExpComplement { theta: f64 },
}

impl WeightingFunction {
    pub fn power(theta: f64) -> Result<Self> {
        check_theta("power", theta)?;
        Ok(Self::PowerProduct { theta })
    }

    pub fn exp_complement(theta: f64) -> Result<Self> {
        check_theta("exp_complement", theta)?;
        Ok(Self::ExpComplement { theta })
    }

    /// Looks up a weighting by its tag name.
    pub fn from_tag(name: &str, theta: f64) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "power" => Self::power(theta),
            "exp_complement" => Self::exp_complement(theta),
            other => Err(Error::Domain(format!(
                "unknown weighting `{other}`; valid weightings are {}",
                Self::TAGS.join(", ")
            ))),
        }
    }

    pub const TAGS: [&'static str; 2] = ["power", "exp_complement"];

    pub fn tag(&self) -> &'static str {
        match self {
            Self::PowerProduct { .. } => "power",
            Self::ExpComplement { .. } => "exp_complement",
        }
    }

    pub fn theta(&self) -> f64 {
        match *self {
            Self::PowerProduct { theta } | Self::ExpComplement { theta } => theta,
        }
    }

    /// Same variant with a different `θ`.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::from_tag(self.tag(), theta)
    }

    pub fn validate(&self) -> Result<()> {
        check_theta(self.tag(), self.theta())
    }

    pub fn value(&self, u: f64, v: f64) -> f64 {
        match *self {
            Self::PowerProduct { theta } => (theta * (u.ln() + v.ln())).exp(),
            Self::ExpComplement { theta } => (-theta * (1.0 - u) * (1.0 - v)).exp(),
        }
    }

    /// `∂π/∂u`
    pub fn du(&self, u: f64, v: f64) -> f64 {
        match *self {
            Self::PowerProduct { theta } => {
                theta * ((theta - 1.0) * u.ln() + theta * v.ln()).exp()
            }
            Self::ExpComplement { theta } => theta * (1.0 - v) * self.value(u, v),
        }
    }

    /// `∂π/∂v`
    pub fn dv(&self, u: f64, v: f64) -> f64 {
        self.du(v, u)
    }

    /// `∂²π/∂u∂v`
    pub fn duv(&self, u: f64, v: f64) -> f64 {
        match *self {
            Self::PowerProduct { theta } => {
                theta * theta * ((theta - 1.0) * (u.ln() + v.ln())).exp()
            }
            Self::ExpComplement { theta } => {
                theta * self.value(u, v) * (theta * (1.0 - u) * (1.0 - v) - 1.0)
            }
        }
    }

    /// True when `π(u, v) = π(v, u)`.
    pub fn is_symmetric(&self) -> bool {
        true
    }
}

fn check_theta(name: &str, theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::params(name, format!("theta must be positive and finite, got {theta}")))
    }
}

impl fmt::Display for WeightingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.tag(), self.theta())
    }
}

impl FromStr for WeightingFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        if args.len() != 1 {
            return Err(Error::params(name, format!("expected one parameter, got {}", args.len())));
        }
        Self::from_tag(&name, args[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        let p = WeightingFunction::power(2.0).unwrap();
        assert_relative_eq!(p.value(0.5, 0.5), 0.0625, max_relative = 1e-15);
        let e = WeightingFunction::exp_complement(2.0).unwrap();
        assert_relative_eq!(e.value(1e-12, 1e-12), (-2.0f64).exp(), max_relative = 1e-10);
        let p = WeightingFunction::power(1.5).unwrap();
        assert!(p.value(1.0 - 1e-10, 1.0 - 1e-10) > 1.0 - 1e-9);
        assert!(p.value(1.0 - 1e-10, 1.0 - 1e-10) < 1.0);
    }

    #[test]
    fn rejects_bad_theta_and_tags() {
        assert!(WeightingFunction::power(0.0).is_err());
        assert!(WeightingFunction::exp_complement(-1.0).is_err());
        assert!("power(nan)".parse::<WeightingFunction>().is_err());
        assert!("cubic(1)".parse::<WeightingFunction>().is_err());
        let w: WeightingFunction = "exp_complement(1.5)".parse().unwrap();
        assert_eq!(w.to_string(), "exp_complement(1.5)");
    }

    #[test]
    fn monotone_on_grid() {
        for w in [WeightingFunction::power(0.7).unwrap(), WeightingFunction::exp_complement(4.0).unwrap()] {
            for j in 1..100 {
                let v = j as f64 / 100.0;
                let mut prev = 0.0;
                for i in 1..=100 {
                    let u = (i as f64 / 101.0).max(1e-10);
                    let x = w.value(u, v);
                    assert!(x >= prev && x > 0.0 && x < 1.0);
                    prev = x;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn derivatives_match_differences(theta in 0.1f64..10.0, u in 0.05f64..0.95, v in 0.05f64..0.95, exp in any::<bool>()) {
            let w = if exp { WeightingFunction::exp_complement(theta) } else { WeightingFunction::power(theta) }.unwrap();
            let h = 1e-6;
            let du = (w.value(u + h, v) - w.value(u - h, v)) / (2.0 * h);
            let dv = (w.value(u, v + h) - w.value(u, v - h)) / (2.0 * h);
            let duv = (w.du(u, v + h) - w.du(u, v - h)) / (2.0 * h);
            prop_assert!((w.du(u, v) - du).abs() < 1e-6 * (1.0 + du.abs()));
            prop_assert!((w.dv(u, v) - dv).abs() < 1e-6 * (1.0 + dv.abs()));
            prop_assert!((w.duv(u, v) - duv).abs() < 1e-5 * (1.0 + duv.abs()));
        }

        #[test]
        fn power_weight_decreases_in_theta(t1 in 0.05f64..10.0, dt in 0.01f64..5.0, u in 0.01f64..0.99, v in 0.01f64..0.99) {
            let a = WeightingFunction::power(t1).unwrap().value(u, v);
            let b = WeightingFunction::power(t1 + dt).unwrap().value(u, v);
            prop_assert!(a > b);
        }

        #[test]
        fn weight_in_open_unit_interval(theta in 0.01f64..15.0, u in 0.0f64..1.0, v in 0.0f64..1.0, exp in any::<bool>()) {
            let w = if exp { WeightingFunction::exp_complement(theta) } else { WeightingFunction::power(theta) }.unwrap();
            let p = wcopula_point(u, v);
            let x = w.value(p.0, p.1);
            prop_assert!(x > 0.0 && x < 1.0);
        }
    }

    fn wcopula_point(u: f64, v: f64) -> (f64, f64) {
        let p = crate::copula::UnitSquarePoint::new(u, v);
        (p.u, p.v)
    }
}
