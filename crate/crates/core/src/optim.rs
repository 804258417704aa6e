//! Derivative-free minimisation by the Nelder–Mead simplex method.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadSettings {
    pub max_evaluations: usize,
    /// Stop once the largest vertex distance from the best vertex falls below this.
    pub tolerance: f64,
    /// Offset of the initial simplex vertices along each axis.
    pub initial_step: f64,
}

impl Default for NelderMeadSettings {
    fn default() -> Self {
        Self { max_evaluations: 2000, tolerance: 1e-4, initial_step: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimises `f` from `x0`. Non-finite values are treated as `+∞`. `record`
/// sees every evaluated point and its value, in evaluation order.
pub fn nelder_mead<F, R>(mut f: F, x0: &[f64], settings: &NelderMeadSettings, mut record: R) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
    R: FnMut(&[f64], f64),
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let y = f(x);
        let y = if y.is_nan() { f64::INFINITY } else { y };
        record(x, y);
        y
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let y0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), y0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += settings.initial_step;
        let y = eval(&x, &mut evals);
        simplex.push((x, y));
    }

    let mut converged = false;
    while evals < settings.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0.clone();
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&best).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if diameter < settings.tolerance && simplex[0].1.is_finite() {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(1.0);
        let yr = eval(&xr, &mut evals);
        if yr < simplex[0].1 {
            let xe = along(2.0);
            let ye = eval(&xe, &mut evals);
            simplex[n] = if ye < yr { (xe, ye) } else { (xr, yr) };
            continue;
        }
        if yr < simplex[n - 1].1 {
            simplex[n] = (xr, yr);
            continue;
        }
        // contraction, outside if the reflection improved on the worst vertex
        let (xc, yc) = if yr < worst.1 {
            let xc = along(0.5);
            let yc = eval(&xc, &mut evals);
            (xc, yc)
        } else {
            let xc = along(-0.5);
            let yc = eval(&xc, &mut evals);
            (xc, yc)
        };
        if yc < worst.1.min(yr) {
            simplex[n] = (xc, yc);
            continue;
        }
        for i in 1..=n {
            let x: Vec<f64> = simplex[i].0.iter().zip(&best).map(|(xi, b)| b + 0.5 * (xi - b)).collect();
            let y = eval(&x, &mut evals);
            simplex[i] = (x, y);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let settings = NelderMeadSettings { max_evaluations: 5000, tolerance: 1e-8, initial_step: 0.5 };
        let m = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &settings,
            |_, _| {},
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn budget_and_infinite_regions() {
        let settings = NelderMeadSettings { max_evaluations: 30, ..Default::default() };
        let mut count = 0;
        let m = nelder_mead(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 3.0).powi(2) + x[1] * x[1] },
            &[0.5, 0.5],
            &settings,
            |_, _| count += 1,
        );
        assert!(!m.converged);
        assert!(m.evaluations <= 32);
        assert_eq!(count, m.evaluations);
        assert!(m.value.is_finite());
    }
}
