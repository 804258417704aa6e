//! Log-likelihood, maximum-likelihood fitting and AIC.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::blended::{BlendedModel, QuadratureSpec};
use crate::copula::{CopulaFamily, FamilyTag, UnitSquarePoint};
use crate::error::{Error, Result};
use crate::model::CopulaModel;
use crate::optim::{nelder_mead, NelderMeadSettings};
use crate::stats::kendall_tau;
use crate::weighting::WeightingFunction;

/// Densities below this are clamped before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Pseudo-observations on the unit square.
#[derive(Debug, Clone)]
pub struct Dataset {
    points: Vec<UnitSquarePoint>,
}

impl Dataset {
    pub fn new(points: Vec<UnitSquarePoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Domain(format!("a dataset needs at least 2 observations, got {}", points.len())));
        }
        if let Some(p) = points.iter().find(|p| !(p.u.is_finite() && p.v.is_finite())) {
            return Err(Error::Domain(format!("non-finite observation ({}, {})", p.u, p.v)));
        }
        Ok(Self { points: points.into_iter().map(|p| UnitSquarePoint::new(p.u, p.v)).collect() })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(u, v)| UnitSquarePoint { u, v }).collect())
    }

    pub fn points(&self) -> &[UnitSquarePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn us(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.u).collect()
    }

    pub fn vs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.v).collect()
    }

    pub fn kendall_tau(&self) -> f64 {
        kendall_tau(&self.us(), &self.vs())
    }
}

#[derive(Debug, Clone)]
pub struct LogLikelihood {
    pub value: f64,
    /// Observations whose density fell below [`DENSITY_FLOOR`].
    pub clamped: usize,
    pub n: usize,
}

impl LogLikelihood {
    pub fn warning(&self) -> Option<String> {
        (self.clamped as f64 > 0.01 * self.n as f64).then(|| {
            format!("ill-conditioned likelihood: {} of {} densities clamped at {DENSITY_FLOOR:e}", self.clamped, self.n)
        })
    }
}

pub fn log_likelihood(model: &CopulaModel, data: &Dataset) -> Result<LogLikelihood> {
    let dens: Vec<f64> = data.points.par_iter().map(|p| model.pdf(p.u, p.v)).collect::<Result<_>>()?;
    let mut value = 0.0;
    let mut clamped = 0;
    for d in dens {
        if !(d >= DENSITY_FLOOR) {
            clamped += 1;
        }
        value += d.max(DENSITY_FLOOR).ln();
    }
    Ok(LogLikelihood { value, clamped, n: data.len() })
}

pub fn aic(loglik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

/// Which model to fit, without parameter values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelStructure {
    Single(FamilyTag),
    Blended { tail: FamilyTag, body: FamilyTag, weighting: &'static str },
}

impl ModelStructure {
    pub fn blended(tail: FamilyTag, body: FamilyTag, weighting: &str) -> Result<Self> {
        let weighting = WeightingFunction::TAGS
            .iter()
            .copied()
            .find(|t| *t == weighting.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Domain(format!(
                    "unknown weighting `{weighting}`; valid weightings are {}",
                    WeightingFunction::TAGS.join(", ")
                ))
            })?;
        Ok(ModelStructure::Blended { tail, body, weighting })
    }

    pub fn n_params(&self) -> usize {
        match *self {
            ModelStructure::Single(t) => t.param_count(),
            ModelStructure::Blended { tail, body, .. } => tail.param_count() + body.param_count() + 1,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ModelStructure::Single(t) => t.name().to_string(),
            ModelStructure::Blended { tail, body, weighting } => format!("{}+{}@{weighting}", tail.name(), body.name()),
        }
    }
}

/// Reads `gumbel` or `gumbel+gaussian@power`.
impl std::str::FromStr for ModelStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once('+') {
            None => Ok(ModelStructure::Single(FamilyTag::from_name(s)?)),
            Some((tail, rest)) => {
                let (body, w) = rest.split_once('@').ok_or_else(|| {
                    Error::Domain(format!("blended structure `{s}` needs a weighting, e.g. `gumbel+gaussian@power`"))
                })?;
                ModelStructure::blended(FamilyTag::from_name(tail)?, FamilyTag::from_name(body)?, w)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitSpec {
    pub structure: ModelStructure,
    /// Starting parameters in the order `(θ, tail..., body...)`; data-driven defaults when absent.
    pub initial: Option<Vec<f64>>,
    pub settings: NelderMeadSettings,
    pub quad: QuadratureSpec,
    pub restarts: usize,
    pub seed: u64,
}

impl FitSpec {
    pub fn new(structure: ModelStructure) -> Self {
        Self {
            structure,
            initial: None,
            settings: NelderMeadSettings::default(),
            quad: QuadratureSpec::default(),
            restarts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: CopulaModel,
    pub loglik: f64,
    pub aic: f64,
    pub k: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Every evaluated parameter vector (natural scale) and its log-likelihood.
    pub trace: Vec<(Vec<f64>, f64)>,
    pub warnings: Vec<String>,
}

fn to_free(tag: FamilyTag, params: &[f64]) -> Vec<f64> {
    use FamilyTag::*;
    match tag {
        Gaussian => vec![params[0].atanh()],
        StudentT => vec![params[0].atanh(), params[1].ln()],
        Frank => vec![params[0]],
        Clayton | HuslerReiss | Galambos => vec![params[0].ln()],
        Joe | Gumbel | InvertedGumbel => vec![(params[0] - 1.0).ln()],
        ColesTawn => vec![params[0].ln(), params[1].ln()],
    }
}

fn from_free(tag: FamilyTag, z: &[f64]) -> Vec<f64> {
    use FamilyTag::*;
    match tag {
        Gaussian => vec![z[0].tanh()],
        StudentT => vec![z[0].tanh(), z[1].exp()],
        Frank => vec![z[0]],
        Clayton | HuslerReiss | Galambos => vec![z[0].exp()],
        Joe | Gumbel | InvertedGumbel => vec![1.0 + z[0].exp()],
        ColesTawn => vec![z[0].exp(), z[1].exp()],
    }
}

/// Default starting parameters given the sample Kendall's tau.
pub fn initial_params(tag: FamilyTag, tau: f64) -> Vec<f64> {
    use FamilyTag::*;
    let tau = if tau.is_finite() { tau } else { 0.0 };
    match tag {
        Gaussian => vec![(std::f64::consts::FRAC_PI_2 * tau).sin().clamp(-0.95, 0.95)],
        StudentT => vec![(std::f64::consts::FRAC_PI_2 * tau).sin().clamp(-0.95, 0.95), 5.0],
        Frank => vec![if tau < 0.0 { -1.5 } else { 1.5 }],
        ColesTawn => vec![1.5, 1.5],
        _ => vec![1.5],
    }
}

fn build(structure: &ModelStructure, natural: &[f64], quad: QuadratureSpec) -> Result<CopulaModel> {
    match *structure {
        ModelStructure::Single(tag) => Ok(CopulaModel::Single(CopulaFamily::new(tag, natural)?)),
        ModelStructure::Blended { tail, body, weighting } => {
            let nt = tail.param_count();
            let w = WeightingFunction::from_tag(weighting, natural[0])?;
            let t = CopulaFamily::new(tail, &natural[1..1 + nt])?;
            let b = CopulaFamily::new(body, &natural[1 + nt..])?;
            Ok(CopulaModel::blended(BlendedModel::new(t, b, w, quad)?))
        }
    }
}

fn natural_to_free(structure: &ModelStructure, natural: &[f64]) -> Vec<f64> {
    match *structure {
        ModelStructure::Single(tag) => to_free(tag, natural),
        ModelStructure::Blended { tail, body, .. } => {
            let nt = tail.param_count();
            let mut z = vec![natural[0].ln()];
            z.extend(to_free(tail, &natural[1..1 + nt]));
            z.extend(to_free(body, &natural[1 + nt..]));
            z
        }
    }
}

fn free_to_natural(structure: &ModelStructure, z: &[f64]) -> Vec<f64> {
    match *structure {
        ModelStructure::Single(tag) => from_free(tag, z),
        ModelStructure::Blended { tail, body, .. } => {
            let nt = tail.param_count();
            let mut p = vec![z[0].exp()];
            p.extend(from_free(tail, &z[1..1 + nt]));
            p.extend(from_free(body, &z[1 + nt..]));
            p
        }
    }
}

struct Run {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
    converged: bool,
    trace: Vec<(Vec<f64>, f64)>,
}

/// Maximum-likelihood fit by multi-start Nelder–Mead in transformed coordinates.
pub fn fit_mle(spec: &FitSpec, data: &Dataset) -> Result<FitResult> {
    let structure = spec.structure;
    let natural0 = match &spec.initial {
        Some(p) => {
            build(&structure, p, spec.quad)?;
            p.clone()
        }
        None => {
            let tau = data.kendall_tau();
            match structure {
                ModelStructure::Single(tag) => initial_params(tag, tau),
                ModelStructure::Blended { tail, body, .. } => {
                    let mut p = vec![1.0];
                    p.extend(initial_params(tail, tau));
                    p.extend(initial_params(body, tau));
                    p
                }
            }
        }
    };
    let z0 = natural_to_free(&structure, &natural0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter = Normal::new(0.0, 0.5).expect("valid normal");
    let starts: Vec<Vec<f64>> = (0..spec.restarts.max(1))
        .map(|i| if i == 0 { z0.clone() } else { z0.iter().map(|z| z + jitter.sample(&mut rng)).collect() })
        .collect();

    let runs: Vec<Run> = starts
        .par_iter()
        .map(|start| {
            let mut trace = Vec::new();
            let objective = |z: &[f64]| {
                let natural = free_to_natural(&structure, z);
                match build(&structure, &natural, spec.quad).and_then(|m| log_likelihood(&m, data)) {
                    Ok(ll) if ll.value.is_finite() => -ll.value,
                    _ => f64::INFINITY,
                }
            };
            let m = nelder_mead(objective, start, &spec.settings, |z, y| {
                trace.push((free_to_natural(&structure, z), -y));
            });
            Run { x: m.x, value: m.value, evaluations: m.evaluations, converged: m.converged, trace }
        })
        .collect();

    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let best = runs
        .iter()
        .filter(|r| r.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Fit(format!("no start produced a finite likelihood for {}", structure.label())))?;
    let natural = free_to_natural(&structure, &best.x);
    let model = build(&structure, &natural, spec.quad)?;
    let ll = log_likelihood(&model, data)?;
    let k = structure.n_params();
    let mut warnings = Vec::new();
    if let Some(w) = ll.warning() {
        warnings.push(w);
    }
    if !best.converged {
        warnings.push(format!("optimizer stopped after {} evaluations without converging", best.evaluations));
    }
    let converged = best.converged;
    let trace = runs.into_iter().flat_map(|r| r.trace).collect();
    Ok(FitResult { model, loglik: ll.value, aic: aic(ll.value, k), k, evaluations, converged, trace, warnings })
}

pub fn fit_single_copula(tag: FamilyTag, data: &Dataset) -> Result<FitResult> {
    fit_mle(&FitSpec::new(ModelStructure::Single(tag)), data)
}
