use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wcopula::copula::{CopulaFamily, UnitSquarePoint};
use wcopula::dependence::{chi_r, empirical_chi_eta};
use wcopula::inference::Dataset;
use wcopula::resampling::{block_bootstrap_ci, statistic_band, BlockBootstrapSpec, Statistic};

fn uniforms(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset::new((0..n).map(|_| UnitSquarePoint::new(rng.random(), rng.random())).collect()).unwrap()
}

#[test]
fn full_length_blocks_collapse_rotation_invariant_statistics() {
    let d = uniforms(300, 1);
    let spec = BlockBootstrapSpec { block_length: 300, replicates: 60, seed: 2 };
    for stat in [Statistic::Tau, Statistic::ChiCurve(vec![0.7, 0.8])] {
        let band = statistic_band(&d, &stat, &spec).unwrap();
        for (lo, hi) in band.lower.iter().zip(&band.upper) {
            assert_eq!(lo.unwrap(), hi.unwrap());
        }
    }
}

#[test]
fn tau_band_for_independent_data_contains_zero() {
    let d = uniforms(10_000, 3);
    let band = statistic_band(&d, &Statistic::Tau, &BlockBootstrapSpec::default()).unwrap();
    let (lo, hi) = (band.lower[0].unwrap(), band.upper[0].unwrap());
    assert!(lo < 0.0 && hi > 0.0, "[{lo}, {hi}]");
    assert!(band.warnings.is_empty());
}

#[test]
fn gumbel_chi_band_coverage() {
    let g = CopulaFamily::gumbel(2.0).unwrap();
    let truth = chi_r(&g, 0.9).unwrap();
    let mut covered = 0;
    for rep in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + rep);
        let d = Dataset::new(g.sample(892, &mut rng).unwrap()).unwrap();
        let spec = BlockBootstrapSpec { seed: rep, ..Default::default() };
        let band = statistic_band(&d, &Statistic::ChiCurve(vec![0.9]), &spec).unwrap();
        if band.lower[0].unwrap() <= truth && truth <= band.upper[0].unwrap() {
            covered += 1;
        }
    }
    assert!(covered >= 18, "covered {covered} of 20");
}

#[test]
fn missing_values_propagate_with_warning() {
    let d = uniforms(200, 4);
    // at r = 0.99 most resamples of 200 independent points have no joint exceedance
    let band = statistic_band(&d, &Statistic::ChiCurve(vec![0.5, 0.99]), &BlockBootstrapSpec::default()).unwrap();
    assert!(band.missing_fraction[0] == 0.0);
    assert!(band.missing_fraction[1] > 0.2);
    assert_eq!(band.warnings.len(), 1);
    assert!(band.warnings[0].contains("grid point 1"));
}

#[test]
fn point_estimates_sit_inside_their_bands() {
    let d = uniforms(2000, 5);
    let grid = vec![0.7, 0.75, 0.8, 0.85, 0.9];
    let band = statistic_band(&d, &Statistic::ChiCurve(grid.clone()), &BlockBootstrapSpec::default()).unwrap();
    let outside = grid
        .iter()
        .enumerate()
        .filter(|&(j, &r)| {
            let c = empirical_chi_eta(&d, r).unwrap().0;
            c < band.lower[j].unwrap() || c > band.upper[j].unwrap()
        })
        .count();
    assert!(outside <= 1);
}

#[test]
fn generic_evaluator_sees_full_length_resamples() {
    let series: Vec<usize> = (0..97).collect();
    let spec = BlockBootstrapSpec { block_length: 14, replicates: 50, seed: 9 };
    let band = block_bootstrap_ci(&series, &spec, |s| {
        assert_eq!(s.len(), 97);
        vec![Some(s.iter().sum::<usize>() as f64)]
    })
    .unwrap();
    assert!(band.lower[0].unwrap() <= band.upper[0].unwrap());
}
