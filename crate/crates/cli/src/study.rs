//! Simulation studies: parameter recovery under the true blend, and fits of
//! blends to data from a single copula.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use wcopula::blended::{BlendedModel, QuadratureSpec};
use wcopula::copula::CopulaFamily;
use wcopula::dependence::{chi_r, eta_r, kendall_tau, TauMethod};
use wcopula::inference::{fit_mle, Dataset, FitSpec, ModelStructure};
use wcopula::model::CopulaModel;
use wcopula::optim::NelderMeadSettings;
use wcopula::stats::percentile_sorted;
use wcopula::weighting::WeightingFunction;

use crate::commands::{fit_spec, param_names, quadrature};
use crate::config::{output, value, Key, Settings};
use crate::error::CliError;
use crate::io::{csv_text, emit, num, opt, provenance};

pub const STUDY_KEYS: [Key; 12] = [
    value("scenarios", Some("recovery-1,recovery-2,misspec-joe,capture-gaussian,capture-galambos"), "comma-separated scenario names"),
    value("replicates", Some("10"), "data sets per scenario and sample size"),
    value("sizes", Some("500,1000"), "sample sizes of the recovery scenarios"),
    value("n", Some("1000"), "sample size of the misspec and capture scenarios"),
    value("restarts", Some("3"), "optimizer starts per fit"),
    value("max_evals", Some("2000"), "likelihood evaluations per start"),
    value("tolerance", Some("1e-4"), "simplex size at convergence"),
    value("quad_nodes", Some("64"), "Gauss-Legendre nodes per panel"),
    value("quad_eps", Some("1e-6"), "inner edge of the marginal grid"),
    value("spline_points", Some("200"), "points of the marginal inverse spline"),
    value("seed", Some("0"), "base seed; each data set derives its own"),
    output("out_dir", "report directory"),
];

/// Thresholds at which fitted and true `χ(r)`, `η(r)` are compared.
pub const SUMMARY_GRID: [f64; 5] = [0.7, 0.8, 0.9, 0.95, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Fit the generating blend and compare estimates with the truth.
    Recovery,
    /// Single-copula data; blends containing it, against the single fit.
    Misspecification,
    /// Single-copula data; a blend that cannot contain it.
    Capture,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub kind: Kind,
    pub truth: CopulaModel,
    pub fits: Vec<ModelStructure>,
}

fn blend(tail: CopulaFamily, body: CopulaFamily, w: WeightingFunction) -> Result<CopulaModel, CliError> {
    Ok(CopulaModel::blended(BlendedModel::with_defaults(tail, body, w)?))
}

pub const SCENARIOS: [&str; 5] = ["recovery-1", "recovery-2", "misspec-joe", "capture-gaussian", "capture-galambos"];

pub fn scenario(name: &str) -> Result<Scenario, CliError> {
    let s = |x: &str| -> Result<ModelStructure, CliError> { Ok(x.parse()?) };
    let sc = match name {
        "recovery-1" => Scenario {
            name: "recovery-1",
            kind: Kind::Recovery,
            truth: blend(CopulaFamily::gumbel(2.0)?, CopulaFamily::clayton(1.0)?, WeightingFunction::power(0.8)?)?,
            fits: vec![s("gumbel+clayton@power")?],
        },
        "recovery-2" => Scenario {
            name: "recovery-2",
            kind: Kind::Recovery,
            truth: blend(CopulaFamily::gaussian(0.6)?, CopulaFamily::joe(2.0)?, WeightingFunction::power(1.0)?)?,
            fits: vec![s("gaussian+joe@power")?],
        },
        "misspec-joe" => Scenario {
            name: "misspec-joe",
            kind: Kind::Misspecification,
            truth: CopulaModel::Single(CopulaFamily::joe(2.0)?),
            fits: vec![s("joe")?, s("joe+gaussian@power")?, s("clayton+joe@power")?],
        },
        "capture-gaussian" => Scenario {
            name: "capture-gaussian",
            kind: Kind::Capture,
            truth: CopulaModel::Single(CopulaFamily::gaussian(0.65)?),
            fits: vec![s("gaussian")?, s("inverted_gumbel+student_t@power")?],
        },
        "capture-galambos" => Scenario {
            name: "capture-galambos",
            kind: Kind::Capture,
            truth: CopulaModel::Single(CopulaFamily::galambos(2.0)?),
            fits: vec![s("galambos")?, s("coles_tawn+frank@power")?],
        },
        other => {
            return Err(CliError::Usage(format!("unknown scenario `{other}`; valid scenarios are {}", SCENARIOS.join(", "))))
        }
    };
    Ok(sc)
}

#[derive(Debug, Clone)]
pub struct FitTemplate {
    pub restarts: usize,
    pub settings: NelderMeadSettings,
    pub quad: QuadratureSpec,
}

impl Default for FitTemplate {
    fn default() -> Self {
        Self { restarts: 3, settings: NelderMeadSettings::default(), quad: QuadratureSpec::default() }
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub scenarios: Vec<Scenario>,
    pub replicates: usize,
    pub sizes: Vec<usize>,
    pub n: usize,
    pub fit: FitTemplate,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ParamEstimate {
    pub name: String,
    pub truth: Option<f64>,
    pub estimate: f64,
}

#[derive(Debug, Clone)]
pub struct DependenceRow {
    /// `tau`, `chi` or `eta`.
    pub measure: &'static str,
    pub r: Option<f64>,
    pub estimate: Option<f64>,
    pub truth: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitRecord {
    pub scenario: &'static str,
    pub n: usize,
    pub replicate: usize,
    pub fitted: String,
    pub params: Vec<ParamEstimate>,
    pub loglik: f64,
    pub aic: f64,
    pub converged: bool,
    pub evaluations: usize,
    pub seconds: f64,
    pub dependence: Vec<DependenceRow>,
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub scenario: &'static str,
    pub n: usize,
    pub replicate: usize,
    pub fitted: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct StudyReport {
    pub records: Vec<FitRecord>,
    pub failures: Vec<Failure>,
    pub warnings: Vec<String>,
}

/// Seed of one simulated data set.
pub fn data_seed(base: u64, scenario: usize, n: usize, replicate: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((scenario as u64) << 48 | (n as u64) << 16 | replicate as u64)
}

fn dependence_rows(model: &CopulaModel, truth: &[(Option<f64>, Option<f64>)], tau_true: Option<f64>) -> Vec<DependenceRow> {
    let tau = kendall_tau(model, TauMethod::Quadrature).ok();
    let mut rows = vec![DependenceRow { measure: "tau", r: None, estimate: tau, truth: tau_true }];
    for (i, &r) in SUMMARY_GRID.iter().enumerate() {
        rows.push(DependenceRow { measure: "chi", r: Some(r), estimate: chi_r(model, r).ok(), truth: truth[i].0 });
        rows.push(DependenceRow { measure: "eta", r: Some(r), estimate: eta_r(model, r).ok(), truth: truth[i].1 });
    }
    rows
}

/// Per grid point `(χ, η)` of the true model, and its `τ`.
type Truth = (Vec<(Option<f64>, Option<f64>)>, Option<f64>);

struct Job {
    scenario: usize,
    n: usize,
    replicate: usize,
}

/// Runs every scenario; `progress` sees each finished fit.
pub fn run_study<P: Fn(&FitRecord) + Sync>(cfg: &StudyConfig, progress: P) -> StudyReport {
    let mut report = StudyReport::default();
    if cfg.replicates == 0 {
        report.warnings.push("zero replicates requested; the report is empty".into());
        return report;
    }
    let mut jobs = Vec::new();
    for (si, sc) in cfg.scenarios.iter().enumerate() {
        let sizes = if sc.kind == Kind::Recovery { cfg.sizes.clone() } else { vec![cfg.n] };
        for n in sizes {
            for replicate in 0..cfg.replicates {
                jobs.push(Job { scenario: si, n, replicate });
            }
        }
    }
    let truths: Vec<Truth> = cfg
        .scenarios
        .iter()
        .map(|sc| {
            let grid = SUMMARY_GRID.iter().map(|&r| (chi_r(&sc.truth, r).ok(), eta_r(&sc.truth, r).ok())).collect();
            (grid, kendall_tau(&sc.truth, TauMethod::Quadrature).ok())
        })
        .collect();

    let results: Vec<(Vec<FitRecord>, Vec<Failure>)> = jobs
        .par_iter()
        .map(|job| {
            let sc = &cfg.scenarios[job.scenario];
            let seed = data_seed(cfg.seed, job.scenario, job.n, job.replicate);
            let (mut recs, mut fails) = (Vec::new(), Vec::new());
            let data = match sc.truth.sample(job.n, seed).and_then(Dataset::new) {
                Ok(d) => d,
                Err(e) => {
                    fails.push(Failure {
                        scenario: sc.name,
                        n: job.n,
                        replicate: job.replicate,
                        fitted: "(simulation)".into(),
                        error: e.to_string(),
                    });
                    return (recs, fails);
                }
            };
            for st in &sc.fits {
                let spec = FitSpec {
                    structure: *st,
                    initial: None,
                    settings: cfg.fit.settings,
                    quad: cfg.fit.quad,
                    restarts: cfg.fit.restarts,
                    seed,
                };
                let t0 = Instant::now();
                match fit_mle(&spec, &data) {
                    Ok(f) => {
                        let est = f.model.parameter_vector();
                        let truth: Option<Vec<f64>> = match sc.kind {
                            Kind::Recovery => Some(sc.truth.parameter_vector()),
                            _ if matches!(st, ModelStructure::Single(_)) => Some(sc.truth.parameter_vector()),
                            _ => None,
                        };
                        let params = param_names(st)
                            .into_iter()
                            .zip(&est)
                            .enumerate()
                            .map(|(i, (name, &e))| ParamEstimate {
                                name,
                                truth: truth.as_ref().map(|t| t[i]),
                                estimate: e,
                            })
                            .collect();
                        let seconds = t0.elapsed().as_secs_f64();
                        let (grid, tau) = &truths[job.scenario];
                        let rec = FitRecord {
                            scenario: sc.name,
                            n: job.n,
                            replicate: job.replicate,
                            fitted: st.label(),
                            params,
                            loglik: f.loglik,
                            aic: f.aic,
                            converged: f.converged,
                            evaluations: f.evaluations,
                            seconds,
                            dependence: dependence_rows(&f.model, grid, *tau),
                        };
                        progress(&rec);
                        recs.push(rec);
                    }
                    Err(e) => fails.push(Failure {
                        scenario: sc.name,
                        n: job.n,
                        replicate: job.replicate,
                        fitted: st.label(),
                        error: e.to_string(),
                    }),
                }
            }
            (recs, fails)
        })
        .collect();
    for (r, f) in results {
        report.records.extend(r);
        report.failures.extend(f);
    }
    if !report.failures.is_empty() {
        report.warnings.push(format!("{} fits failed; see failures.csv", report.failures.len()));
    }
    report
}

/// Median and quartiles of the estimates of one parameter.
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (percentile_sorted(&v, 0.25), percentile_sorted(&v, 0.5), percentile_sorted(&v, 0.75))
}

/// For each misspecification replicate: did the single copula have the lower AIC than each blend?
pub fn aic_preferences(report: &StudyReport) -> Vec<(&'static str, usize, usize, String, f64, f64)> {
    let mut out = Vec::new();
    for single in report.records.iter().filter(|r| !r.fitted.contains('+')) {
        for b in report.records.iter().filter(|b| {
            b.fitted.contains('+') && b.scenario == single.scenario && b.n == single.n && b.replicate == single.replicate
        }) {
            out.push((single.scenario, single.n, single.replicate, b.fitted.clone(), single.aic, b.aic));
        }
    }
    out
}

pub fn write_report(dir: &Path, prov: &str, report: &StudyReport) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let mut est = Vec::new();
    let mut dep = Vec::new();
    for r in &report.records {
        for p in &r.params {
            est.push(vec![
                r.scenario.to_string(),
                r.n.to_string(),
                r.replicate.to_string(),
                r.fitted.clone(),
                p.name.clone(),
                opt(p.truth),
                num(p.estimate),
                num(r.loglik),
                num(r.aic),
                r.converged.to_string(),
                r.evaluations.to_string(),
            ]);
        }
        for d in &r.dependence {
            dep.push(vec![
                r.scenario.to_string(),
                r.n.to_string(),
                r.replicate.to_string(),
                r.fitted.clone(),
                d.measure.to_string(),
                opt(d.r),
                opt(d.estimate),
                opt(d.truth),
            ]);
        }
    }
    let h = ["scenario", "n", "replicate", "fitted", "parameter", "truth", "estimate", "loglik", "aic", "converged", "evaluations"];
    emit(Some(&dir.join("estimates.csv")), &csv_text(prov, &h, &est)?)?;
    let h = ["scenario", "n", "replicate", "fitted", "measure", "r", "estimate", "truth"];
    emit(Some(&dir.join("dependence.csv")), &csv_text(prov, &h, &dep)?)?;

    // per (scenario, n, fitted, parameter) summaries, in first-seen order
    let mut keys: Vec<(&str, usize, &str, &str, Option<f64>)> = Vec::new();
    for r in &report.records {
        for p in &r.params {
            let k = (r.scenario, r.n, r.fitted.as_str(), p.name.as_str(), p.truth);
            if !keys.iter().any(|x| x.0 == k.0 && x.1 == k.1 && x.2 == k.2 && x.3 == k.3) {
                keys.push(k);
            }
        }
    }
    keys.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let summary: Vec<Vec<String>> = keys
        .iter()
        .map(|&(sc, n, fitted, name, truth)| {
            let vals: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.scenario == sc && r.n == n && r.fitted == fitted)
                .flat_map(|r| r.params.iter().filter(|p| p.name == name).map(|p| p.estimate))
                .collect();
            let (q1, med, q3) = quartiles(&vals);
            vec![sc.into(), n.to_string(), fitted.into(), name.into(), opt(truth), num(med), num(q1), num(q3), vals.len().to_string()]
        })
        .collect();
    let h = ["scenario", "n", "fitted", "parameter", "truth", "median", "q25", "q75", "replicates"];
    emit(Some(&dir.join("summary.csv")), &csv_text(prov, &h, &summary)?)?;

    let prefs = aic_preferences(report);
    let rows: Vec<Vec<String>> = prefs
        .iter()
        .map(|(sc, n, rep, blend, a1, a2)| {
            vec![sc.to_string(), n.to_string(), rep.to_string(), blend.clone(), num(*a1), num(*a2), (a1 < a2).to_string()]
        })
        .collect();
    let h = ["scenario", "n", "replicate", "blend", "single_aic", "blend_aic", "single_preferred"];
    emit(Some(&dir.join("aic.csv")), &csv_text(prov, &h, &rows)?)?;

    let rows: Vec<Vec<String>> = report
        .failures
        .iter()
        .map(|f| vec![f.scenario.into(), f.n.to_string(), f.replicate.to_string(), f.fitted.clone(), f.error.clone()])
        .collect();
    emit(Some(&dir.join("failures.csv")), &csv_text(prov, &["scenario", "n", "replicate", "fitted", "error"], &rows)?)?;

    let mut warn = format!("{prov}\n");
    for w in &report.warnings {
        warn.push_str(w);
        warn.push('\n');
    }
    emit(Some(&dir.join("warnings.txt")), &warn)
}

pub fn study(s: &Settings) -> Result<(), CliError> {
    let names: Vec<String> = s.list("scenarios")?;
    let scenarios = names.iter().map(|n| scenario(n)).collect::<Result<Vec<_>, _>>()?;
    let template = fit_spec(s, ModelStructure::Single(wcopula::copula::FamilyTag::Gaussian))?;
    let cfg = StudyConfig {
        scenarios,
        replicates: s.get("replicates")?,
        sizes: s.list("sizes")?,
        n: s.get("n")?,
        fit: FitTemplate { restarts: template.restarts, settings: template.settings, quad: quadrature(s)? },
        seed: s.get("seed")?,
    };
    let report = run_study(&cfg, |r| {
        eprintln!(
            "{} n={} replicate {}: {} loglik {:.3} in {:.1} s",
            r.scenario, r.n, r.replicate, r.fitted, r.loglik, r.seconds
        );
    });
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for f in &report.failures {
        eprintln!("failed: {} n={} replicate {} {}: {}", f.scenario, f.n, f.replicate, f.fitted, f.error);
    }
    let prov = provenance(s, Some(cfg.seed))?;
    write_report(&s.path("out_dir")?, &prov, &report)
}
