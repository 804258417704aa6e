//! Rejection sampling from the blended density `c*`.
//!
//! Proposals from the tail copula are kept with probability `π`, proposals
//! from the body copula with probability `1 - π`. Each component draws from
//! its own ChaCha stream so results do not depend on thread scheduling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blended::{Axis, BlendedModel};
use crate::copula::{CopulaFamily, UnitSquarePoint};
use crate::error::{Error, Result};
use crate::weighting::WeightingFunction;

const TAIL_STREAM: u64 = 1;
const BODY_STREAM: u64 = 2;
const SUBSAMPLE_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Tail,
    Body,
}

impl Origin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::Tail => "tail",
            Origin::Body => "body",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SampleRequest {
    pub n_target: usize,
    pub oversample: f64,
    pub seed: u64,
}

impl SampleRequest {
    pub fn new(n_target: usize, seed: u64) -> Self {
        Self { n_target, oversample: 1.3, seed }
    }
}

/// Draws kept from `c*`, with bookkeeping of the proposal pass that produced them.
#[derive(Debug, Clone)]
pub struct CstarSample {
    pub points: Vec<UnitSquarePoint>,
    pub origins: Vec<Origin>,
    /// Proposals drawn from each component in the final pass.
    pub proposals: usize,
    pub accepted_tail: usize,
    pub accepted_body: usize,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` proposals from `family` and keeps those whose uniform falls
/// below the acceptance probability. Proposals come first on the stream,
/// then the `n` acceptance uniforms.
pub fn accept_stream(
    family: &CopulaFamily,
    weight: &WeightingFunction,
    origin: Origin,
    n: usize,
    seed: u64,
) -> Result<Vec<UnitSquarePoint>> {
    let stream = match origin {
        Origin::Tail => TAIL_STREAM,
        Origin::Body => BODY_STREAM,
    };
    let mut rng = rng_for(seed, stream);
    let proposals = family.sample(n, &mut rng)?;
    let mut kept = Vec::new();
    for p in proposals {
        let w: f64 = rng.random();
        let pi = weight.value(p.u, p.v);
        let keep = match origin {
            Origin::Tail => w < pi,
            Origin::Body => w < 1.0 - pi,
        };
        if keep {
            kept.push(p);
        }
    }
    Ok(kept)
}

/// Exactly `n_target` draws from `c*`, each tagged with its component.
pub fn sample_cstar(model: &BlendedModel, req: &SampleRequest) -> Result<CstarSample> {
    if req.n_target == 0 {
        return Ok(CstarSample { points: vec![], origins: vec![], proposals: 0, accepted_tail: 0, accepted_body: 0 });
    }
    if !(req.oversample >= 1.0 && req.oversample.is_finite()) {
        return Err(Error::Domain(format!("oversample factor must be at least 1, got {}", req.oversample)));
    }
    let k = model.normalising_constants().0;
    let mut n = (req.oversample * req.n_target as f64 / k).ceil() as usize;
    let mut achieved = 0;
    for _ in 0..3 {
        let (tail, body) = rayon::join(
            || accept_stream(model.tail(), model.weight(), Origin::Tail, n, req.seed),
            || accept_stream(model.body(), model.weight(), Origin::Body, n, req.seed),
        );
        let (tail, body) = (tail?, body?);
        achieved = tail.len() + body.len();
        if achieved >= req.n_target {
            let (accepted_tail, accepted_body) = (tail.len(), body.len());
            let mut pool: Vec<(UnitSquarePoint, Origin)> = tail
                .into_iter()
                .map(|p| (p, Origin::Tail))
                .chain(body.into_iter().map(|p| (p, Origin::Body)))
                .collect();
            let mut rng = rng_for(req.seed, SUBSAMPLE_STREAM);
            let (chosen, _) = pool.partial_shuffle(&mut rng, req.n_target);
            let (points, origins) = chosen.iter().copied().unzip();
            return Ok(CstarSample { points, origins, proposals: n, accepted_tail, accepted_body });
        }
        n *= 2;
    }
    Err(Error::SamplingShortfall { achieved, target: req.n_target })
}

/// Draws from the induced copula: `c*` draws pushed through the margins of `c*`.
pub fn sample_blended_copula(model: &BlendedModel, n: usize, seed: u64) -> Result<Vec<UnitSquarePoint>> {
    let draws = sample_cstar(model, &SampleRequest::new(n, seed))?;
    Ok(draws
        .points
        .iter()
        .map(|p| UnitSquarePoint::new(model.marginal_cdf(Axis::U, p.u), model.marginal_cdf(Axis::V, p.v)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_replays_the_stream() {
        let fam = CopulaFamily::gumbel(2.0).unwrap();
        let w = WeightingFunction::power(1.5).unwrap();
        let n = 2000;
        let kept = accept_stream(&fam, &w, Origin::Tail, n, 99).unwrap();
        let mut rng = rng_for(99, TAIL_STREAM);
        let proposals = fam.sample(n, &mut rng).unwrap();
        let expected: Vec<UnitSquarePoint> = proposals
            .into_iter()
            .filter(|p| rng.random::<f64>() < w.value(p.u, p.v))
            .collect();
        assert_eq!(kept, expected);
    }

    #[test]
    fn unit_weight_rejects_all_body_draws() {
        let fam = CopulaFamily::gumbel(2.0).unwrap();
        let w = WeightingFunction::power(1e-12).unwrap();
        let kept = accept_stream(&fam, &w, Origin::Body, 500, 1).unwrap();
        assert!(kept.is_empty());
    }
}
