use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wcopula::blended::BlendedModel;
use wcopula::copula::CopulaFamily;
use wcopula::error::Error;
use wcopula::margins::SemiParametricMargin;
use wcopula::model::{Comonotone, Independence};
use wcopula::probability::{
    conditional_probability, empirical_probability, joint_probability, model_probability, Interval, QueryMode,
    RegionQuery, UniformMargin,
};
use wcopula::resampling::{block_bootstrap_ci, BlockBootstrapSpec};
use wcopula::weighting::WeightingFunction;

fn margin(shift: f64) -> SemiParametricMargin {
    let body: Vec<f64> = (0..950).map(|i| shift + 10.0 * i as f64 / 950.0).collect();
    SemiParametricMargin::new(&body, shift + 10.0, 0.05, 0.15, 2.0).unwrap()
}

fn joint(x: Interval, y: Interval) -> RegionQuery {
    RegionQuery { x, y, mode: QueryMode::Joint }
}

fn given_x(y: Interval, x: Interval) -> RegionQuery {
    RegionQuery { x, y, mode: QueryMode::ConditionalOnX }
}

fn blend() -> BlendedModel {
    BlendedModel::with_defaults(
        CopulaFamily::gumbel(2.0).unwrap(),
        CopulaFamily::gaussian(0.4).unwrap(),
        WeightingFunction::power(1.5).unwrap(),
    )
    .unwrap()
}

#[test]
fn independence_factorises() {
    let (mx, my) = (margin(0.0), margin(50.0));
    for (x, y) in [(3.0, 55.0), (9.5, 61.0), (14.0, 52.0)] {
        let q = joint(Interval::at_least(x), Interval::at_least(y));
        let p = joint_probability(&mx, &my, &Independence, &q).unwrap();
        assert!((p - (1.0 - mx.cdf(x)) * (1.0 - my.cdf(y))).abs() < 1e-15);
        let c = conditional_probability(&mx, &my, &Independence, &given_x(Interval::at_least(y), Interval::between(x, x + 1.0)))
            .unwrap();
        assert!((c - (1.0 - my.cdf(y))).abs() < 1e-12);
    }
}

#[test]
fn full_plane_has_unit_mass() {
    let m = blend();
    let q = joint(Interval::default(), Interval::default());
    let p = joint_probability(&margin(0.0), &margin(0.0), &m, &q).unwrap();
    assert!((p - 1.0).abs() < 1e-6);
}

#[test]
fn comonotone_upper_rectangle() {
    let q: RegionQuery = "P[x>=0.3 & y>=0.7]".parse().unwrap();
    let p = joint_probability(&UniformMargin, &UniformMargin, &Comonotone, &q).unwrap();
    assert!((p - 0.3).abs() < 1e-15);
}

#[test]
fn unbounded_band_gives_marginal_probability() {
    let m = blend();
    let (mx, my) = (margin(0.0), margin(0.0));
    let y = Interval::at_least(8.0);
    let c = conditional_probability(&mx, &my, &m, &given_x(y, Interval::default())).unwrap();
    let j = joint_probability(&mx, &my, &m, &joint(Interval::default(), y)).unwrap();
    assert!((c - j).abs() < 1e-12);
    assert!((j - (1.0 - my.cdf(8.0))).abs() < 1e-6);
}

#[test]
fn extrapolation_beyond_the_sample() {
    let m = blend();
    let (mx, my) = (margin(0.0), margin(0.0));
    // the sample ends at 10; the band lies in the GPD tail
    let band = Interval::between(18.0, 19.0);
    let mut last = 1.0;
    for y in [5.0, 10.0, 15.0, 20.0, 30.0] {
        let p = conditional_probability(&mx, &my, &m, &given_x(Interval::at_least(y), band)).unwrap();
        assert!(p.is_finite() && p <= last, "{y}: {p}");
        last = p;
    }
}

#[test]
fn degenerate_conditioning_band() {
    let (mx, my) = (margin(0.0), margin(0.0));
    let q = given_x(Interval::at_least(5.0), Interval::between(-10.0, -5.0));
    match conditional_probability(&mx, &my, &Independence, &q) {
        Err(Error::ConditioningDegenerate { probability }) => assert!(probability < 1e-12),
        other => panic!("{other:?}"),
    }
}

#[test]
fn partition_of_y_sums_to_one() {
    let m = blend();
    let (mx, my) = (margin(0.0), margin(0.0));
    let band = Interval::between(9.0, 12.0);
    let cuts = [f64::NEG_INFINITY, 2.0, 7.5, 10.0, 11.0, 16.0, f64::INFINITY];
    let total: f64 = cuts
        .windows(2)
        .map(|w| {
            let y = Interval { lo: w[0].is_finite().then_some(w[0]), hi: w[1].is_finite().then_some(w[1]) };
            model_probability(&mx, &my, &m, &given_x(y, band)).unwrap()
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn empirical_frequencies() {
    let data: Vec<(f64, f64)> = (0..1001).map(|i| (i as f64, 2.0 * i as f64)).collect();
    assert_eq!(empirical_probability(&data, &joint(Interval::default(), Interval::default())), (1.0, 1001));
    assert_eq!(empirical_probability(&data, &"P[x>=5000]".parse().unwrap()), (0.0, 0));
    let (p, n) = empirical_probability(&data, &"P[x>=500 & y>=1000]".parse().unwrap());
    assert!((p - 0.5).abs() < 1e-3);
    assert_eq!(n, 501);
    let (p, _) = empirical_probability(&data, &"P[y>=1000 | 400<=x<=599]".parse().unwrap());
    assert!((p - 0.5).abs() < 1e-12);
    assert!(empirical_probability(&data, &"P[y>=1 | x>=5000]".parse().unwrap()).0.is_nan());
}

#[test]
fn model_probabilities_sit_in_empirical_bands() {
    let g = CopulaFamily::gumbel(2.0).unwrap();
    let queries: Vec<RegionQuery> = ["P[x>=0.9 & y>=0.9]", "P[x>=0.7 & y>=0.95]", "P[y>=0.9 | 0.8<=x<=0.9]", "P[y>=0.8 | x>=0.95]"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let truth: Vec<f64> =
        queries.iter().map(|q| model_probability(&UniformMargin, &UniformMargin, &g, q).unwrap()).collect();
    let (mut inside, mut total) = (0, 0);
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let pts: Vec<(f64, f64)> = g.sample(10_000, &mut rng).unwrap().iter().map(|p| (p.u, p.v)).collect();
        let spec = BlockBootstrapSpec { seed: trial, ..Default::default() };
        let band = block_bootstrap_ci(&pts, &spec, |s| {
            queries.iter().map(|q| Some(empirical_probability(s, q).0).filter(|p| p.is_finite())).collect()
        })
        .unwrap();
        for (j, t) in truth.iter().enumerate() {
            total += 1;
            inside += (band.lower[j].unwrap() <= *t && *t <= band.upper[j].unwrap()) as usize;
        }
    }
    assert!(inside as f64 >= 0.9 * total as f64, "{inside}/{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn joint_exceedance_non_increasing(a in 0.0f64..14.0, b in 0.0f64..14.0, d in 0.0f64..3.0) {
        let g = CopulaFamily::gumbel(1.7).unwrap();
        let (mx, my) = (margin(0.0), margin(0.0));
        let p = |x: f64, y: f64| joint_probability(&mx, &my, &g, &joint(Interval::at_least(x), Interval::at_least(y))).unwrap();
        prop_assert!(p(a + d, b) <= p(a, b) + 1e-15);
        prop_assert!(p(a, b + d) <= p(a, b) + 1e-15);
    }
}
