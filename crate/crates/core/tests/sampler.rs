use wcopula::blended::{Axis, BlendedModel};
use wcopula::copula::CopulaFamily;
use wcopula::quadrature::GaussLegendre;
use wcopula::sampler::{sample_blended_copula, sample_cstar, Origin, SampleRequest};
use wcopula::stats::{chi_square_sf, ks_one_sample, ks_two_sample};
use wcopula::weighting::WeightingFunction;

fn model(weight: WeightingFunction) -> BlendedModel {
    BlendedModel::with_defaults(CopulaFamily::gumbel(2.0).unwrap(), CopulaFamily::gaussian(0.6).unwrap(), weight)
        .unwrap()
}

#[test]
fn degenerate_weight_keeps_only_tail_draws() {
    let m = model(WeightingFunction::power(1e-12).unwrap());
    let s = sample_cstar(&m, &SampleRequest::new(1000, 5)).unwrap();
    assert_eq!(s.points.len(), 1000);
    assert!(s.origins.iter().all(|o| *o == Origin::Tail));
    assert_eq!(s.accepted_body, 0);
    assert_eq!(s.accepted_tail, s.proposals);
}

#[test]
fn acceptance_counts_match_normalising_constants() {
    let m = model(WeightingFunction::power(1.5).unwrap());
    let (k, kt, kb) = m.normalising_constants();
    let s = sample_cstar(&m, &SampleRequest::new(100_000, 11)).unwrap();
    let n = s.proposals as f64;
    let se = |p: f64| (n * p * (1.0 - p)).sqrt();
    assert!((s.accepted_tail as f64 - n * kt).abs() < 4.0 * se(kt));
    assert!((s.accepted_body as f64 - n * kb).abs() < 4.0 * se(kb));
    let pooled = (s.accepted_tail + s.accepted_body) as f64;
    let sd = (n * (kt * (1.0 - kt) + kb * (1.0 - kb))).sqrt();
    assert!((pooled - n * k).abs() < 3.0 * sd);
    // tail share among kept points
    let share = s.origins.iter().filter(|o| **o == Origin::Tail).count() as f64 / s.points.len() as f64;
    let p = kt / k;
    assert!((share - p).abs() < 3.0 * (p * (1.0 - p) / s.points.len() as f64).sqrt());
}

fn histogram_p_value(m: &BlendedModel, seed: u64) -> f64 {
    let n = 100_000;
    let s = sample_cstar(m, &SampleRequest::new(n, seed)).unwrap();
    let mut counts = [[0usize; 10]; 10];
    for p in &s.points {
        let i = ((p.u * 10.0) as usize).min(9);
        let j = ((p.v * 10.0) as usize).min(9);
        counts[i][j] += 1;
    }
    let gl = GaussLegendre::new(64);
    let mut stat = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let (a, b) = (i as f64 / 10.0, j as f64 / 10.0);
            let prob = gl.integrate_2d((a, a + 0.1), (b, b + 0.1), |u, v| m.cstar_density(u, v));
            let e = prob * n as f64;
            stat += (counts[i][j] as f64 - e).powi(2) / e;
        }
    }
    chi_square_sf(stat, 99.0)
}

#[test]
fn histogram_matches_density() {
    for w in [WeightingFunction::power(1.5).unwrap(), WeightingFunction::exp_complement(1.5).unwrap()] {
        let p = histogram_p_value(&model(w), 2024);
        assert!(p > 1e-3, "{w}: p = {p}");
    }
}

#[test]
fn induced_copula_has_uniform_margins() {
    let m = model(WeightingFunction::power(1.5).unwrap());
    let s = sample_blended_copula(&m, 100_000, 3).unwrap();
    let us: Vec<f64> = s.iter().map(|p| p.u).collect();
    let vs: Vec<f64> = s.iter().map(|p| p.v).collect();
    assert!(ks_one_sample(&us, |x| x).1 > 1e-3);
    assert!(ks_one_sample(&vs, |x| x).1 > 1e-3);
    assert!(sample_blended_copula(&m, 0, 3).unwrap().is_empty());
}

#[test]
fn induced_chi_matches_quadrature() {
    let m = model(WeightingFunction::exp_complement(1.5).unwrap());
    let n = 100_000;
    let s = sample_blended_copula(&m, n, 17).unwrap();
    let r = 0.9;
    let joint = s.iter().filter(|p| p.u > r && p.v > r).count() as f64 / n as f64;
    let chi_hat = joint / (1.0 - r);
    let p = m.survival(r, r).unwrap();
    let chi = p / (1.0 - r);
    let se = (p * (1.0 - p) / n as f64).sqrt() / (1.0 - r);
    assert!((chi_hat - chi).abs() < 3.0 * se, "{chi_hat} vs {chi}");
}

#[test]
fn identical_components_reproduce_the_copula() {
    let g = CopulaFamily::gumbel(2.0).unwrap();
    let m = BlendedModel::with_defaults(g, g, WeightingFunction::power(1.0).unwrap()).unwrap();
    let s = sample_blended_copula(&m, 20_000, 8).unwrap();
    let us: Vec<f64> = s.iter().map(|p| p.u).collect();
    assert!(ks_one_sample(&us, |x| x).1 > 1e-3);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    let direct = g.sample(20_000, &mut rng).unwrap();
    let ca: Vec<f64> = s.iter().map(|p| g.cdf(p.u, p.v)).collect();
    let cb: Vec<f64> = direct.iter().map(|p| g.cdf(p.u, p.v)).collect();
    assert!(ks_two_sample(&ca, &cb).1 > 1e-3);
    assert!((m.marginal_cdf(Axis::U, 0.3) - 0.3).abs() < 1e-9);
}

#[test]
fn fixed_seed_is_reproducible() {
    let m = model(WeightingFunction::power(1.5).unwrap());
    let a = sample_cstar(&m, &SampleRequest::new(5000, 42)).unwrap();
    let b = sample_cstar(&m, &SampleRequest::new(5000, 42)).unwrap();
    assert_eq!(a.points, b.points);
    assert_eq!(a.origins, b.origins);
    let c = sample_cstar(&m, &SampleRequest::new(5000, 43)).unwrap();
    assert_ne!(a.points, c.points);
}
