//! Circular block bootstrap for time-ordered bivariate series.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::copula::UnitSquarePoint;
use crate::dependence::empirical_chi_eta;
use crate::error::{Error, Result};
use crate::inference::Dataset;
use crate::stats::{kendall_tau, percentile_sorted};

/// Fraction of missing replicate values above which a band is flagged.
pub const MISSING_WARN_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockBootstrapSpec {
    pub block_length: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BlockBootstrapSpec {
    fn default() -> Self {
        Self { block_length: 14, replicates: 200, seed: 0 }
    }
}

impl BlockBootstrapSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.block_length < 1 || self.block_length > n {
            return Err(Error::Domain(format!("block length must lie in [1, {n}], got {}", self.block_length)));
        }
        if self.replicates < 50 {
            return Err(Error::Domain(format!("at least 50 bootstrap replicates are needed, got {}", self.replicates)));
        }
        Ok(())
    }
}

/// Statistics with a ready-made evaluator.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    ChiCurve(Vec<f64>),
    EtaCurve(Vec<f64>),
    Tau,
}

/// Pointwise equal-tail 95% band. `None` where no replicate produced a value.
#[derive(Debug, Clone)]
pub struct BootstrapBand {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub missing_fraction: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Resample index matrix: `B` rows of `n` indices, each row built from
/// `⌈n/L⌉` wrapped blocks with uniformly drawn starts.
pub fn resample_indices(n: usize, spec: &BlockBootstrapSpec) -> Result<Vec<Vec<usize>>> {
    spec.validate(n)?;
    let l = spec.block_length;
    let blocks = n.div_ceil(l);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.replicates)
        .map(|_| {
            let mut row = Vec::with_capacity(blocks * l);
            for _ in 0..blocks {
                let s = rng.random_range(0..n);
                row.extend((0..l).map(|k| (s + k) % n));
            }
            row.truncate(n);
            row
        })
        .collect())
}

/// Bands for a vector-valued statistic. The evaluator returns one value per
/// grid point, `None` where the statistic is undefined on that resample.
pub fn block_bootstrap_ci<T, F>(series: &[T], spec: &BlockBootstrapSpec, evaluator: F) -> Result<BootstrapBand>
where
    T: Clone + Sync,
    F: Fn(&[T]) -> Vec<Option<f64>> + Sync,
{
    let idx = resample_indices(series.len(), spec)?;
    let values: Vec<Vec<Option<f64>>> = idx
        .par_iter()
        .map(|row| {
            let resample: Vec<T> = row.iter().map(|&i| series[i].clone()).collect();
            evaluator(&resample)
        })
        .collect();
    let m = values.first().map_or(0, Vec::len);
    if values.iter().any(|v| v.len() != m) {
        return Err(Error::Domain("bootstrap statistic changed length between replicates".into()));
    }
    let b = values.len() as f64;
    let mut band = BootstrapBand { lower: vec![], upper: vec![], missing_fraction: vec![], warnings: vec![] };
    for j in 0..m {
        let mut col: Vec<f64> = values.iter().filter_map(|v| v[j]).filter(|x| x.is_finite()).collect();
        col.sort_by(f64::total_cmp);
        let missing = 1.0 - col.len() as f64 / b;
        if missing > MISSING_WARN_FRACTION {
            band.warnings.push(format!(
                "grid point {j}: {:.0}% of bootstrap replicates undefined, band is degenerate",
                100.0 * missing
            ));
        }
        let (lo, hi) = if col.is_empty() {
            (None, None)
        } else {
            (Some(percentile_sorted(&col, 0.025)), Some(percentile_sorted(&col, 0.975)))
        };
        band.lower.push(lo);
        band.upper.push(hi);
        band.missing_fraction.push(missing);
    }
    Ok(band)
}

fn as_dataset(points: &[UnitSquarePoint]) -> Option<Dataset> {
    Dataset::new(points.to_vec()).ok()
}

/// Evaluates one of the built-in statistics on a sample.
pub fn evaluate_statistic(stat: &Statistic, points: &[UnitSquarePoint]) -> Vec<Option<f64>> {
    match stat {
        Statistic::Tau => {
            let u: Vec<f64> = points.iter().map(|p| p.u).collect();
            let v: Vec<f64> = points.iter().map(|p| p.v).collect();
            let t = kendall_tau(&u, &v);
            vec![t.is_finite().then_some(t)]
        }
        Statistic::ChiCurve(grid) | Statistic::EtaCurve(grid) => {
            let chi = matches!(stat, Statistic::ChiCurve(_));
            let Some(d) = as_dataset(points) else {
                return vec![None; grid.len()];
            };
            grid.iter()
                .map(|&r| empirical_chi_eta(&d, r).ok().map(|(c, e)| if chi { c } else { e }))
                .collect()
        }
    }
}

/// Bands for a built-in statistic over a pseudo-observation series.
pub fn statistic_band(data: &Dataset, stat: &Statistic, spec: &BlockBootstrapSpec) -> Result<BootstrapBand> {
    block_bootstrap_ci(data.points(), spec, |s| evaluate_statistic(stat, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_have_full_length_and_wrap() {
        let spec = BlockBootstrapSpec { block_length: 14, replicates: 50, seed: 3 };
        let idx = resample_indices(100, &spec).unwrap();
        assert_eq!(idx.len(), 50);
        for row in &idx {
            assert_eq!(row.len(), 100);
            for w in row.chunks(14) {
                for p in w.windows(2) {
                    assert_eq!(p[1], (p[0] + 1) % 100);
                }
            }
        }
        assert_eq!(idx, resample_indices(100, &spec).unwrap());
        assert_ne!(idx, resample_indices(100, &BlockBootstrapSpec { seed: 4, ..spec }).unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(BlockBootstrapSpec { block_length: 0, ..Default::default() }.validate(10).is_err());
        assert!(BlockBootstrapSpec { block_length: 11, ..Default::default() }.validate(10).is_err());
        assert!(BlockBootstrapSpec { replicates: 49, ..Default::default() }.validate(100).is_err());
    }
}
