//! Extremal dependence measures `χ(r)`, `η(r)` and Kendall's tau.

use rayon::prelude::*;

use crate::copula::{CopulaFamily, FamilyTag, EPS_CLAMP};
use crate::error::{Error, Result};
use crate::inference::Dataset;
use crate::model::{CopulaCdf, CopulaModel};
use crate::quadrature::GaussLegendre;
use crate::special::norm_cdf;
use crate::stats::kendall_tau as sample_tau;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Chi,
    Eta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Empirical,
    SingleCopula,
    Blended,
    Theoretical,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Empirical => "empirical",
            Source::SingleCopula => "single-copula",
            Source::Blended => "blended",
            Source::Theoretical => "theoretical",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DependenceCurve {
    pub r: Vec<f64>,
    /// `None` where the measure is undefined (no joint exceedance mass).
    pub values: Vec<Option<f64>>,
    pub measure: Measure,
    pub source: Source,
}

/// Ten thresholds from 0.7 to `1 - 1.49e-8`, evenly spaced in `log(1 - r)`.
pub fn default_r_grid() -> Vec<f64> {
    let (a, b) = (0.3f64.ln(), 1.49e-8f64.ln());
    (0..10).map(|i| 1.0 - (a + (b - a) * i as f64 / 9.0).exp()).collect()
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 - EPS_CLAMP {
        Ok(())
    } else {
        Err(Error::Domain(format!("threshold r must lie in (0, 1 - {EPS_CLAMP:e}), got {r}")))
    }
}

/// Joint exceedance `1 - 2r + C(r, r)`, computed on the survival side.
fn joint_exceedance<C: CopulaCdf + ?Sized>(c: &C, r: f64) -> Result<f64> {
    check_r(r)?;
    c.copula_survival(r, r)
}

pub fn chi_r<C: CopulaCdf + ?Sized>(c: &C, r: f64) -> Result<f64> {
    Ok(joint_exceedance(c, r)? / (1.0 - r))
}

pub fn eta_r<C: CopulaCdf + ?Sized>(c: &C, r: f64) -> Result<f64> {
    let s = joint_exceedance(c, r)?;
    if !(s > 0.0) {
        return Err(Error::UndefinedMeasure { r, reason: format!("joint exceedance probability is {s:e}") });
    }
    Ok((1.0 - r).ln() / s.ln())
}

/// `χ(r)` and `η(r)` over a grid of thresholds.
pub fn dependence_curves<C: CopulaCdf + Sync + ?Sized>(
    c: &C,
    grid: &[f64],
    source: Source,
) -> Result<(DependenceCurve, DependenceCurve)> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("threshold grid must be strictly ascending".into()));
    }
    let s: Vec<f64> = grid.par_iter().map(|&r| joint_exceedance(c, r)).collect::<Result<_>>()?;
    let chi = grid.iter().zip(&s).map(|(r, s)| Some(s / (1.0 - r))).collect();
    let eta = grid.iter().zip(&s).map(|(r, &s)| (s > 0.0).then(|| (1.0 - r).ln() / s.ln())).collect();
    Ok((
        DependenceCurve { r: grid.to_vec(), values: chi, measure: Measure::Chi, source },
        DependenceCurve { r: grid.to_vec(), values: eta, measure: Measure::Eta, source },
    ))
}

/// Plug-in `(χ̂(r), η̂(r))`: the joint exceedance frequency against the mean
/// marginal exceedance frequency.
pub fn empirical_chi_eta(data: &Dataset, r: f64) -> Result<(f64, f64)> {
    check_r(r)?;
    let n = data.len() as f64;
    let (mut ju, mut jv, mut joint) = (0usize, 0usize, 0usize);
    for p in data.points() {
        let (a, b) = (p.u > r, p.v > r);
        ju += a as usize;
        jv += b as usize;
        joint += (a && b) as usize;
    }
    if joint == 0 {
        return Err(Error::UndefinedMeasure {
            r,
            reason: format!("no joint exceedances among {} observations ({ju} in u, {jv} in v)", data.len()),
        });
    }
    let marginal = 0.5 * (ju + jv) as f64 / n;
    let s = joint as f64 / n;
    let eta = if s < 1.0 { marginal.ln() / s.ln() } else { 1.0 };
    Ok((s / marginal, eta))
}

/// Closed-form limits `(χ, η)` where available.
pub fn theoretical_limits(family: &CopulaFamily) -> (Option<f64>, Option<f64>) {
    let a = family.params()[0];
    match family.tag() {
        FamilyTag::Gaussian => (Some(0.0), Some((1.0 + a) / 2.0)),
        FamilyTag::Frank => (Some(0.0), Some(0.5)),
        FamilyTag::Gumbel => (Some(2.0 - 2f64.powf(1.0 / a)), Some(1.0)),
        FamilyTag::HuslerReiss => (Some(2.0 - 2.0 * norm_cdf(1.0 / a)), Some(1.0)),
        _ => (None, None),
    }
}

#[derive(Debug, Clone, Copy)]
pub enum TauMethod {
    MonteCarlo { n: usize, seed: u64 },
    Quadrature,
}

impl Default for TauMethod {
    fn default() -> Self {
        TauMethod::MonteCarlo { n: 100_000, seed: 0 }
    }
}

/// Kendall's tau of a model.
pub fn kendall_tau(model: &CopulaModel, method: TauMethod) -> Result<f64> {
    match method {
        TauMethod::MonteCarlo { n, seed } => {
            if n < 10_000 {
                return Err(Error::Domain(format!("Monte Carlo tau needs at least 10^4 draws, got {n}")));
            }
            let s = model.sample(n, seed)?;
            let u: Vec<f64> = s.iter().map(|p| p.u).collect();
            let v: Vec<f64> = s.iter().map(|p| p.v).collect();
            Ok(sample_tau(&u, &v))
        }
        TauMethod::Quadrature => Ok(match model {
            CopulaModel::Single(f) => family_tau_quadrature(f),
            CopulaModel::Blended(m) => m.kendall_tau_quadrature(),
        }),
    }
}

/// `1 - 4 ∫∫ ∂_u C ∂_v C`, on logit-mapped Gauss–Legendre nodes.
fn family_tau_quadrature(f: &CopulaFamily) -> f64 {
    let gl = GaussLegendre::new(96);
    let zmax = (1.0 / EPS_CLAMP).ln();
    let nodes: Vec<(f64, f64)> = [(-zmax, 0.0), (0.0, zmax)]
        .iter()
        .flat_map(|&(a, b)| gl.mapped(a, b).collect::<Vec<_>>())
        .map(|(z, w)| {
            let t = 1.0 / (1.0 + (-z).exp());
            (t, w * t * (1.0 - t))
        })
        .collect();
    let rows: Vec<f64> = nodes
        .par_iter()
        .map(|&(u, wu)| wu * nodes.iter().map(|&(v, wv)| wv * f.cond_u(u, v) * f.cond_v(u, v)).sum::<f64>())
        .collect();
    1.0 - 4.0 * rows.iter().sum::<f64>()
}
