use approx::assert_abs_diff_eq;
use wcopula::blended::{Axis, BlendedModel, QuadratureSpec};
use wcopula::copula::CopulaFamily;
use wcopula::quadrature::GaussLegendre;
use wcopula::weighting::WeightingFunction;

fn gumbel_gauss(weight: WeightingFunction) -> BlendedModel {
    BlendedModel::with_defaults(CopulaFamily::gumbel(2.0).unwrap(), CopulaFamily::gaussian(0.6).unwrap(), weight)
        .unwrap()
}

fn power(theta: f64) -> WeightingFunction {
    WeightingFunction::power(theta).unwrap()
}

fn expc(theta: f64) -> WeightingFunction {
    WeightingFunction::exp_complement(theta).unwrap()
}

/// Table of (tail, body) pairs used across the invariant checks.
fn table_cases() -> Vec<(CopulaFamily, CopulaFamily)> {
    vec![
        (CopulaFamily::gaussian(0.6).unwrap(), CopulaFamily::frank(2.0).unwrap()),
        (CopulaFamily::gumbel(3.0).unwrap(), CopulaFamily::frank(1.0).unwrap()),
        (CopulaFamily::gaussian(0.5).unwrap(), CopulaFamily::gumbel(1.2).unwrap()),
        (CopulaFamily::husler_reiss(2.0).unwrap(), CopulaFamily::gumbel(2.0).unwrap()),
    ]
}

// Reference values from oracles/blended_oracle.py (tensor double-exponential
// quadrature, stable under halving the step).
const K_POWER: f64 = 1.011262286022;
const F_HALF: f64 = 0.491957796608;
const Q95: f64 = 0.954864843697;
const CSTAR_MID: f64 = 1.268954931954;
const C_RECT: f64 = 0.286058935354;
const S_RECT: f64 = 3.796992070674e-2;
const S_CORNER: f64 = 5.792622291614e-7;
const K_EXPC: f64 = 0.992204646711;
const F_PDF_EXPC_09: f64 = 1.017353811876;

#[test]
fn normalising_constant_matches_oracle() {
    let m = gumbel_gauss(power(1.5));
    let (k, kt, kb) = m.normalising_constants();
    assert_abs_diff_eq!(k, K_POWER, epsilon = 1e-8);
    assert!(((kt + kb) - k).abs() <= 1e-10 * k);
    let e = gumbel_gauss(expc(1.5));
    assert_abs_diff_eq!(e.normalising_constants().0, K_EXPC, epsilon = 1e-8);
}

#[test]
fn margins_match_oracle() {
    let m = gumbel_gauss(power(1.5));
    assert_abs_diff_eq!(m.marginal_cdf(Axis::U, 0.5), F_HALF, epsilon = 1e-8);
    assert_abs_diff_eq!(m.marginal_cdf(Axis::V, 0.5), F_HALF, epsilon = 1e-8);
    assert_abs_diff_eq!(m.marginal_quantile(Axis::U, 0.95).unwrap(), Q95, epsilon = 1e-7);
    assert_abs_diff_eq!(m.cstar_density(0.5, 0.5), CSTAR_MID, epsilon = 1e-9);
    let e = gumbel_gauss(expc(1.5));
    assert_abs_diff_eq!(e.marginal_pdf(Axis::U, 0.9), F_PDF_EXPC_09, epsilon = 1e-8);
}

#[test]
fn cstar_rectangles_match_oracle() {
    let m = gumbel_gauss(power(1.5));
    assert_abs_diff_eq!(m.cstar_cdf(0.3, 0.8), C_RECT, epsilon = 1e-8);
    assert_abs_diff_eq!(m.cstar_survival(0.9, 0.95), S_RECT, epsilon = 1e-8);
    let s = m.cstar_survival(1.0 - 1e-6, 1.0 - 1e-6);
    assert!((s / S_CORNER - 1.0).abs() < 1e-4, "{s}");
    // margins of C*
    assert_abs_diff_eq!(m.cstar_cdf(0.4, 1.0), m.marginal_cdf(Axis::U, 0.4), epsilon = 1e-12);
    let (a, b) = (0.35, 0.6);
    let inc_exc = 1.0 - m.marginal_cdf(Axis::U, a) - m.marginal_cdf(Axis::V, b) + m.cstar_cdf(a, b);
    assert_abs_diff_eq!(m.cstar_survival(a, b), inc_exc, epsilon = 1e-8);
}

#[test]
fn identical_components_collapse() {
    let g = CopulaFamily::gaussian(0.6).unwrap();
    let m = BlendedModel::with_defaults(g, g, power(1.5)).unwrap();
    let (k, kt, kb) = m.normalising_constants();
    assert_abs_diff_eq!(k, 1.0, epsilon = 1e-10);
    assert!(kt > 0.0 && kb > 0.0);
    for i in 1..20 {
        let x = i as f64 / 20.0;
        assert_abs_diff_eq!(m.marginal_cdf(Axis::U, x), x, epsilon = 1e-5);
        assert_abs_diff_eq!(m.marginal_pdf(Axis::U, x), 1.0, epsilon = 1e-5);
        let y = 1.0 - x * 0.7;
        assert_abs_diff_eq!(m.cstar_density(x, y), g.pdf(x, y), epsilon = 1e-12);
        assert_abs_diff_eq!(m.pdf(x, y).unwrap(), g.pdf(x, y), epsilon = 1e-4 * g.pdf(x, y).max(1.0));
    }
    assert_abs_diff_eq!(m.marginal_quantile(Axis::U, 0.73).unwrap(), 0.73, epsilon = 1e-5);
    let ind = CopulaFamily::gaussian(0.0).unwrap();
    let m = BlendedModel::with_defaults(ind, ind, expc(2.0)).unwrap();
    assert_abs_diff_eq!(m.cdf(0.3, 0.7).unwrap(), 0.21, epsilon = 1e-3);
}

#[test]
fn degenerate_weight_gives_tail_copula() {
    let t = CopulaFamily::gumbel(2.0).unwrap();
    let m = BlendedModel::with_defaults(t, CopulaFamily::clayton(1.0).unwrap(), power(1e-12)).unwrap();
    let (k, kt, kb) = m.normalising_constants();
    assert_abs_diff_eq!(k, 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(kt, 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(kb, 0.0, epsilon = 1e-6);
    for i in 1..10 {
        for j in 1..10 {
            let (u, v) = (i as f64 / 10.0, j as f64 / 10.0);
            let want = t.pdf(u, v);
            assert_abs_diff_eq!(m.pdf(u, v).unwrap(), want, epsilon = 1e-4 * want.max(1.0));
        }
        let x = i as f64 / 10.0;
        assert_abs_diff_eq!(m.marginal_cdf(Axis::U, x), x, epsilon = 1e-5);
    }
    assert_abs_diff_eq!(m.cdf(0.5, 0.5).unwrap(), 0.375214227246, epsilon = 1e-3);
}

#[test]
fn quantile_round_trip() {
    for m in [gumbel_gauss(power(1.5)), gumbel_gauss(expc(4.0))] {
        for i in 1..100 {
            let q = i as f64 / 100.0;
            for axis in [Axis::U, Axis::V] {
                let x = m.marginal_quantile(axis, q).unwrap();
                assert_abs_diff_eq!(m.marginal_cdf(axis, x), q, epsilon = 1e-8);
            }
        }
        for p in [1e-3, 1e-6, 1e-9, 1.49e-8] {
            let x = m.marginal_upper_quantile(Axis::U, p).unwrap();
            assert!((m.marginal_survival(Axis::U, x) / p - 1.0).abs() < 1e-6);
            let x = m.marginal_quantile(Axis::U, p).unwrap();
            assert!((m.marginal_cdf(Axis::U, x) / p - 1.0).abs() < 1e-6);
        }
        assert!(m.marginal_quantile(Axis::U, 0.0).is_err());
        assert!(m.marginal_quantile(Axis::U, 1.0).is_err());
    }
}

#[test]
fn pdf_grid_integrates_to_cdf_grid() {
    let m = gumbel_gauss(expc(1.5));
    let n = 2000;
    let mut acc = 0.0;
    let mut prev = m.marginal_pdf(Axis::U, 0.0);
    for i in 1..=n {
        let x = i as f64 / n as f64;
        let f = m.marginal_pdf(Axis::U, x);
        acc += 0.5 * (prev + f) / n as f64;
        prev = f;
        if i % 100 == 0 {
            assert_abs_diff_eq!(acc, m.marginal_cdf(Axis::U, x), epsilon = 1e-4);
        }
    }
}

fn table_models() -> Vec<BlendedModel> {
    let mut out = Vec::new();
    for (t, b) in table_cases() {
        out.push(BlendedModel::with_defaults(t, b, power(1.0)).unwrap());
    }
    out.push(BlendedModel::with_defaults(CopulaFamily::gumbel(2.0).unwrap(), CopulaFamily::clayton(1.0).unwrap(), power(0.8)).unwrap());
    out.push(BlendedModel::with_defaults(CopulaFamily::coles_tawn(0.6, 2.5).unwrap(), CopulaFamily::joe(2.0).unwrap(), expc(3.0)).unwrap());
    out
}

#[test]
fn induced_copula_is_normalised_with_uniform_margins() {
    let gl = GaussLegendre::new(128);
    for m in table_models() {
        let (k, kt, kb) = m.normalising_constants();
        assert!(((kt + kb) - k).abs() <= 1e-10 * k);
        let mut total = 0.0;
        for (u, wu) in gl.mapped(0.0, 1.0) {
            let mut row = 0.0;
            for (v, wv) in gl.mapped(0.0, 1.0) {
                row += wv * m.pdf(u, v).unwrap();
            }
            total += wu * row;
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 2e-3);
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let mv: f64 = gl.mapped(0.0, 1.0).map(|(v, w)| w * m.pdf(u, v).unwrap()).sum();
            let mu: f64 = gl.mapped(0.0, 1.0).map(|(v, w)| w * m.pdf(v, u).unwrap()).sum();
            assert_abs_diff_eq!(mv, 1.0, epsilon = 5e-3);
            assert_abs_diff_eq!(mu, 1.0, epsilon = 5e-3);
        }
    }
}

#[test]
fn doubling_nodes_is_stable() {
    let fine = QuadratureSpec { nodes: 128, ..QuadratureSpec::default() };
    for (t, b) in table_cases() {
        let m = BlendedModel::with_defaults(t, b, power(1.0)).unwrap();
        let f = BlendedModel::new(t, b, power(1.0), fine).unwrap();
        assert!((m.normalising_constants().0 - f.normalising_constants().0).abs() < 1e-5);
        for i in 1..=5 {
            for j in 1..=5 {
                let (u, v) = (i as f64 / 6.0, j as f64 / 6.0);
                let (a, c) = (m.pdf(u, v).unwrap(), f.pdf(u, v).unwrap());
                assert!((a / c - 1.0).abs() < 1e-3, "{t} {b} ({u},{v}) {a} {c}");
            }
        }
    }
}

#[test]
fn copula_cdf_properties() {
    let m = gumbel_gauss(power(1.5));
    let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let mut prev_row = vec![0.0; grid.len()];
    for &u in &grid {
        let mut prev = 0.0;
        for (j, &v) in grid.iter().enumerate() {
            let c = m.cdf(u, v).unwrap();
            assert!(c >= prev - 1e-12 && c >= prev_row[j] - 1e-12);
            assert!(c <= u.min(v) + 1e-12 && c >= (u + v - 1.0).max(0.0) - 1e-12);
            prev = c;
            prev_row[j] = c;
        }
    }
    assert_abs_diff_eq!(m.cdf(0.4, 1.0).unwrap(), 0.4, epsilon = 1e-8);
    let (u, v) = (0.8, 0.9);
    let s = m.survival(u, v).unwrap();
    assert_abs_diff_eq!(s, 1.0 - u - v + m.cdf(u, v).unwrap(), epsilon = 1e-7);
}

#[test]
fn rejects_bad_quadrature() {
    let t = CopulaFamily::gumbel(2.0).unwrap();
    for q in [
        QuadratureSpec { nodes: 8, ..QuadratureSpec::default() },
        QuadratureSpec { eps: 1e-2, ..QuadratureSpec::default() },
        QuadratureSpec { eps: 0.0, ..QuadratureSpec::default() },
    ] {
        assert!(BlendedModel::new(t, t, power(1.0), q).is_err());
    }
}
