use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use wcopula::blended::{Axis, QuadratureSpec};
use wcopula::copula::{CopulaFamily, FamilyTag, UnitSquarePoint};
use wcopula::dependence::{default_r_grid, dependence_curves, empirical_chi_eta, theoretical_limits, Source};
use wcopula::error::Error;
use wcopula::inference::{fit_mle, Dataset, FitResult, FitSpec, ModelStructure};
use wcopula::margins::fit_margins;
use wcopula::model::CopulaModel;
use wcopula::optim::NelderMeadSettings;
use wcopula::probability::{empirical_probability, model_probability, RegionQuery};
use wcopula::resampling::{block_bootstrap_ci, BlockBootstrapSpec};
use wcopula::sampler::{sample_cstar, SampleRequest};
use wcopula::weighting::WeightingFunction;

use crate::config::{input, output, value, Key, Settings};
use crate::error::CliError;
use crate::io::{csv_text, emit, num, opt, provenance, read_columns};

const MODEL_KEYS: [Key; 7] = [
    input("model", "model file written by `fit` (key = value)"),
    value("copula", None, "single copula, e.g. gumbel(2)"),
    value("tail", None, "tail copula of a blend, e.g. gumbel(2)"),
    value("body", None, "body copula of a blend, e.g. gaussian(0.6)"),
    value("weighting", None, "weighting function, e.g. power(1.5) or exp_complement(1.5)"),
    value("quad_nodes", Some("64"), "Gauss-Legendre nodes per panel"),
    value("quad_eps", Some("1e-6"), "inner edge of the marginal grid"),
];

const SPLINE_KEY: Key = value("spline_points", Some("200"), "points of the marginal inverse spline");

pub const SIMULATE_KEYS: [Key; 11] = [
    MODEL_KEYS[0],
    MODEL_KEYS[1],
    MODEL_KEYS[2],
    MODEL_KEYS[3],
    MODEL_KEYS[4],
    MODEL_KEYS[5],
    MODEL_KEYS[6],
    SPLINE_KEY,
    value("n", None, "number of draws"),
    value("seed", Some("0"), "random seed"),
    output("out", "output CSV u,v,origin"),
];

pub const FIT_KEYS: [Key; 15] = [
    input("data", "CSV with columns u,v (pseudo-observations)"),
    value("copula", None, "single family tag, e.g. gumbel"),
    value("tail", None, "tail family tag of a blend"),
    value("body", None, "body family tag of a blend"),
    value("weighting", None, "weighting tag: power or exp_complement"),
    value("start", None, "starting parameters, comma-separated, (theta, tail..., body...) for blends"),
    value("restarts", Some("3"), "optimizer starts"),
    value("max_evals", Some("2000"), "likelihood evaluations per start"),
    value("tolerance", Some("1e-4"), "simplex size at convergence"),
    MODEL_KEYS[5],
    MODEL_KEYS[6],
    SPLINE_KEY,
    value("seed", Some("0"), "seed of the restart jitter"),
    output("out", "model file to write (stdout when absent)"),
    output("trace", "CSV of every evaluated parameter vector"),
];

pub const COMPARE_KEYS: [Key; 10] = [
    input("data", "CSV with columns u,v"),
    value("models", Some("all"), "comma-separated structures, e.g. gumbel,frank,gumbel+gaussian@power; `all` = the ten single families"),
    FIT_KEYS[6],
    FIT_KEYS[7],
    FIT_KEYS[8],
    MODEL_KEYS[5],
    MODEL_KEYS[6],
    SPLINE_KEY,
    value("seed", Some("0"), "seed of the restart jitter"),
    output("out", "output CSV (stdout when absent)"),
];

pub const DEPCURVES_KEYS: [Key; 8] = [
    input("model", "model file; curves of the model"),
    input("data", "CSV with columns u,v; empirical curves"),
    value("grid", None, "comma-separated thresholds r (default: ten from 0.7 to 1-1.49e-8)"),
    value("bootstrap", Some("0"), "bootstrap replicates for empirical bands (0 = none)"),
    value("block_length", Some("14"), "bootstrap block length"),
    value("seed", Some("0"), "bootstrap seed"),
    value("label", Some("data"), "label of the empirical rows"),
    output("out", "output CSV (stdout when absent)"),
];

pub const TRANSFORM_KEYS: [Key; 4] = [
    input("data", "CSV with columns x,y"),
    value("q", Some("0.95"), "threshold quantile of the GPD tails"),
    output("out", "output CSV u,v"),
    output("report", "margin parameter report (stdout when absent)"),
];

pub const PROBS_KEYS: [Key; 8] = [
    input("data", "raw CSV with columns x,y"),
    input("model", "fitted model file"),
    input("queries", "one query per line, e.g. P[x>=22 & y>=100] or P[y>=160 | 28<=x<=29]"),
    value("q", Some("0.95"), "threshold quantile of the GPD margins"),
    value("bootstrap", Some("200"), "bootstrap replicates for empirical bands (0 = none)"),
    value("block_length", Some("14"), "bootstrap block length"),
    value("seed", Some("0"), "bootstrap seed"),
    output("out", "output CSV (stdout when absent)"),
];

fn out_path(s: &Settings, key: &str) -> Option<std::path::PathBuf> {
    s.raw(key).map(std::path::PathBuf::from)
}

pub fn quadrature(s: &Settings) -> Result<QuadratureSpec, CliError> {
    let q = QuadratureSpec { nodes: s.get("quad_nodes")?, eps: s.get("quad_eps")?, spline_points: s.get("spline_points")? };
    q.validate()?;
    Ok(q)
}

/// A fully specified model from `--model`, `--copula` or `--tail/--body/--weighting`.
pub fn model_from(s: &Settings) -> Result<CopulaModel, CliError> {
    if let Some(path) = s.raw("model") {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
        return CopulaModel::from_key_values(&text).map_err(|e| CliError::from(e).context(format!("model file {path}")));
    }
    if let Some(c) = s.raw("copula") {
        return Ok(CopulaModel::Single(c.parse::<CopulaFamily>()?));
    }
    if !(s.has("tail") && s.has("body") && s.has("weighting")) {
        return Err(CliError::Usage(format!(
            "`{}` needs a model: --model FILE, --copula SPEC, or --tail, --body and --weighting",
            s.command
        )));
    }
    let tail: CopulaFamily = s.string("tail")?.parse()?;
    let body: CopulaFamily = s.string("body")?.parse()?;
    let w: WeightingFunction = s.string("weighting")?.parse()?;
    let m = wcopula::blended::BlendedModel::new(tail, body, w, quadrature(s)?)?;
    Ok(CopulaModel::blended(m))
}

fn structure_from(s: &Settings) -> Result<ModelStructure, CliError> {
    if let Some(c) = s.raw("copula") {
        return Ok(ModelStructure::Single(FamilyTag::from_name(c)?));
    }
    if !(s.has("tail") && s.has("body") && s.has("weighting")) {
        return Err(CliError::Usage("`fit` needs --copula TAG, or --tail, --body and --weighting tags".into()));
    }
    Ok(ModelStructure::blended(
        FamilyTag::from_name(&s.string("tail")?)?,
        FamilyTag::from_name(&s.string("body")?)?,
        &s.string("weighting")?,
    )?)
}

pub fn fit_spec(s: &Settings, structure: ModelStructure) -> Result<FitSpec, CliError> {
    let mut spec = FitSpec::new(structure);
    spec.settings = NelderMeadSettings {
        max_evaluations: s.get("max_evals")?,
        tolerance: s.get("tolerance")?,
        ..NelderMeadSettings::default()
    };
    spec.restarts = s.get("restarts")?;
    spec.quad = quadrature(s)?;
    spec.seed = s.get("seed")?;
    Ok(spec)
}

pub fn read_pseudo(path: &str) -> Result<Dataset, CliError> {
    let cols = read_columns(Path::new(path), &["u", "v"]).map_err(|e| match e {
        CliError::Usage(m) if m.contains("no `u` column") || m.contains("no `v` column") => {
            CliError::Usage(format!("{m}; raw data must first go through `wcop transform-margins`"))
        }
        other => other,
    })?;
    if cols[0].iter().chain(&cols[1]).any(|x| !(*x > 0.0 && *x < 1.0)) {
        return Err(CliError::Usage(format!("{path}: u and v must lie strictly inside (0, 1)")));
    }
    let pts = cols[0].iter().zip(&cols[1]).map(|(&u, &v)| UnitSquarePoint::new(u, v)).collect();
    Ok(Dataset::new(pts)?)
}

fn read_raw(path: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut cols = read_columns(Path::new(path), &["x", "y"])?;
    let y = cols.pop().unwrap_or_default();
    let x = cols.pop().unwrap_or_default();
    Ok((x, y))
}

pub fn simulate(s: &Settings) -> Result<(), CliError> {
    let model = model_from(s)?;
    let n: usize = s.get("n")?;
    let seed: u64 = s.get("seed")?;
    let rows: Vec<Vec<String>> = match &model {
        CopulaModel::Blended(m) => {
            let draws = sample_cstar(m, &SampleRequest::new(n, seed))?;
            draws
                .points
                .iter()
                .zip(&draws.origins)
                .map(|(p, o)| {
                    let q = UnitSquarePoint::new(m.marginal_cdf(Axis::U, p.u), m.marginal_cdf(Axis::V, p.v));
                    vec![num(q.u), num(q.v), o.as_str().to_string()]
                })
                .collect()
        }
        CopulaModel::Single(_) => {
            model.sample(n, seed)?.iter().map(|p| vec![num(p.u), num(p.v), "single".to_string()]).collect()
        }
    };
    let text = csv_text(&provenance(s, Some(seed))?, &["u", "v", "origin"], &rows)?;
    emit(Some(&s.path("out")?), &text)
}

pub fn param_names(structure: &ModelStructure) -> Vec<String> {
    match *structure {
        ModelStructure::Single(t) => t.param_names().iter().map(|n| n.to_string()).collect(),
        ModelStructure::Blended { tail, body, .. } => std::iter::once("theta".to_string())
            .chain(tail.param_names().iter().map(|n| format!("tail_{n}")))
            .chain(body.param_names().iter().map(|n| format!("body_{n}")))
            .collect(),
    }
}

/// Model file followed by the fit summary; readable by `CopulaModel::from_key_values`.
pub fn fit_report(prov: &str, fit: &FitResult, n: usize) -> String {
    let mut out = format!("{prov}\n{}", fit.model.to_key_values());
    out.push_str(&format!(
        "n = {n}\nk = {}\nloglik = {}\naic = {}\nevaluations = {}\nconverged = {}\n",
        fit.k,
        num(fit.loglik),
        num(fit.aic),
        fit.evaluations,
        fit.converged
    ));
    for w in &fit.warnings {
        out.push_str(&format!("# warning: {w}\n"));
    }
    out
}

pub fn fit(s: &Settings) -> Result<(), CliError> {
    let data_path = s.string("data")?;
    let data = read_pseudo(&data_path)?;
    let structure = structure_from(s)?;
    let mut spec = fit_spec(s, structure)?;
    if s.has("start") {
        spec.initial = Some(s.list("start")?);
    }
    let t0 = Instant::now();
    let fit = fit_mle(&spec, &data).map_err(|e| CliError::from(e).context(format!("fitting {}", structure.label())))?;
    eprintln!(
        "fit {}: loglik {:.4}, {} evaluations, {:.1} s",
        structure.label(),
        fit.loglik,
        fit.evaluations,
        t0.elapsed().as_secs_f64()
    );
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    let prov = provenance(s, Some(spec.seed))?;
    if let Some(trace) = out_path(s, "trace") {
        let mut header = vec!["evaluation".to_string(), "loglik".to_string()];
        header.extend(param_names(&structure));
        let rows: Vec<Vec<String>> = fit
            .trace
            .iter()
            .enumerate()
            .map(|(i, (p, ll))| {
                let mut r = vec![(i + 1).to_string(), num(*ll)];
                r.extend(p.iter().map(|x| num(*x)));
                r
            })
            .collect();
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        emit(Some(&trace), &csv_text(&prov, &h, &rows)?)?;
    }
    emit(out_path(s, "out").as_deref(), &fit_report(&prov, &fit, data.len()))
}

pub fn parse_structures(list: &str) -> Result<Vec<ModelStructure>, CliError> {
    if list.trim() == "all" {
        return Ok(FamilyTag::ALL.iter().map(|&t| ModelStructure::Single(t)).collect());
    }
    list.split(',').map(str::trim).filter(|x| !x.is_empty()).map(|x| Ok(x.parse()?)).collect()
}

pub fn compare(s: &Settings) -> Result<(), CliError> {
    let data = read_pseudo(&s.string("data")?)?;
    let structures = parse_structures(&s.string("models")?)?;
    let specs: Vec<FitSpec> = structures.iter().map(|&st| fit_spec(s, st)).collect::<Result<_, _>>()?;
    let fits: Vec<(ModelStructure, Result<FitResult, Error>)> =
        specs.par_iter().map(|spec| (spec.structure, fit_mle(spec, &data))).collect();
    let mut ok: Vec<(ModelStructure, FitResult)> = Vec::new();
    for (st, r) in fits {
        match r {
            Ok(f) => ok.push((st, f)),
            Err(e) => eprintln!("warning: {} failed: {e}", st.label()),
        }
    }
    if ok.is_empty() {
        return Err(CliError::Numerical("every model fit failed".into()));
    }
    ok.sort_by(|a, b| a.1.aic.total_cmp(&b.1.aic).then_with(|| a.0.label().cmp(&b.0.label())));
    let best = ok[0].1.aic;
    let rows: Vec<Vec<String>> = ok
        .iter()
        .enumerate()
        .map(|(i, (st, f))| {
            vec![
                (i + 1).to_string(),
                st.label(),
                f.model.label(),
                f.k.to_string(),
                num(f.loglik),
                num(f.aic),
                num(f.aic - best),
                f.converged.to_string(),
            ]
        })
        .collect();
    let header = ["rank", "structure", "model", "k", "loglik", "aic", "delta_aic", "converged"];
    let text = csv_text(&provenance(s, Some(s.get("seed")?))?, &header, &rows)?;
    emit(out_path(s, "out").as_deref(), &text)
}

pub const DEPCURVE_HEADER: [&str; 9] = ["r", "chi", "eta", "source", "label", "chi_lo", "chi_hi", "eta_lo", "eta_hi"];

pub fn depcurves(s: &Settings) -> Result<(), CliError> {
    if !s.has("model") && !s.has("data") {
        return Err(CliError::Usage("`depcurves` needs --model, --data, or both".into()));
    }
    let grid = if s.has("grid") { s.list("grid")? } else { default_r_grid() };
    let mut rows = Vec::new();
    if s.has("model") {
        let model = model_from(s)?;
        let source = match model {
            CopulaModel::Single(_) => Source::SingleCopula,
            CopulaModel::Blended(_) => Source::Blended,
        };
        let (chi, eta) = dependence_curves(&model, &grid, source)?;
        let label = model.label();
        for (i, &r) in grid.iter().enumerate() {
            rows.push(vec![
                num(r),
                opt(chi.values[i]),
                opt(eta.values[i]),
                source.as_str().into(),
                label.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        if let CopulaModel::Single(f) = &model {
            if let (Some(c), Some(e)) = theoretical_limits(f) {
                let th = Source::Theoretical.as_str().to_string();
                rows.push(vec!["1".into(), num(c), num(e), th, label, String::new(), String::new(), String::new(), String::new()]);
            }
        }
    }
    if s.has("data") {
        let data = read_pseudo(&s.string("data")?)?;
        let m = grid.len();
        let curves = |d: &Dataset| -> Vec<Option<f64>> {
            let pairs: Vec<Option<(f64, f64)>> = grid.iter().map(|&r| empirical_chi_eta(d, r).ok()).collect();
            pairs.iter().map(|p| p.map(|p| p.0)).chain(pairs.iter().map(|p| p.map(|p| p.1))).collect()
        };
        let point = curves(&data);
        let b: usize = s.get("bootstrap")?;
        let band = if b > 0 {
            let spec = BlockBootstrapSpec { block_length: s.get("block_length")?, replicates: b, seed: s.get("seed")? };
            let band = block_bootstrap_ci(data.points(), &spec, |pts| match Dataset::new(pts.to_vec()) {
                Ok(d) => curves(&d),
                Err(_) => vec![None; 2 * m],
            })?;
            for w in &band.warnings {
                eprintln!("warning: {w}");
            }
            Some(band)
        } else {
            None
        };
        let label = s.string("label")?;
        for i in 0..m {
            let bands = match &band {
                Some(b) => vec![opt(b.lower[i]), opt(b.upper[i]), opt(b.lower[m + i]), opt(b.upper[m + i])],
                None => vec![String::new(); 4],
            };
            let mut row = vec![num(grid[i]), opt(point[i]), opt(point[m + i]), Source::Empirical.as_str().into(), label.clone()];
            row.extend(bands);
            rows.push(row);
        }
    }
    let text = csv_text(&provenance(s, Some(s.get("seed")?))?, &DEPCURVE_HEADER, &rows)?;
    emit(out_path(s, "out").as_deref(), &text)
}

pub fn transform_margins(s: &Settings) -> Result<(), CliError> {
    let path = s.string("data")?;
    let (x, y) = read_raw(&path)?;
    let q: f64 = s.get("q")?;
    let (mx, my) = fit_margins(&x, &y, q).map_err(|e| CliError::from(e).context(format!("fitting margins of {path}")))?;
    let prov = provenance(s, None)?;
    let rows: Vec<Vec<String>> = x.iter().zip(&y).map(|(&a, &b)| vec![num(mx.cdf(a)), num(my.cdf(b))]).collect();
    emit(Some(&s.path("out")?), &csv_text(&prov, &["u", "v"], &rows)?)?;
    let mut report = format!("{prov}\nq = {}\nn = {}\n", num(q), x.len());
    for (name, m) in [("x", &mx), ("y", &my)] {
        report.push_str(&format!(
            "{name}_threshold = {}\n{name}_phi = {}\n{name}_xi = {}\n{name}_sigma = {}\n",
            num(m.threshold()),
            num(m.phi()),
            num(m.xi()),
            num(m.sigma())
        ));
    }
    emit(out_path(s, "report").as_deref(), &report)
}

pub const PROBS_HEADER: [&str; 6] = ["query", "model_estimate", "empirical", "ci_lo", "ci_hi", "count"];

pub fn read_queries(path: &str) -> Result<Vec<RegionQuery>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("");
        if t.trim().is_empty() {
            continue;
        }
        let q = t.parse::<RegionQuery>().map_err(|e| match e {
            Error::Parse { column, message, .. } => CliError::Usage(format!(
                "{path}: parse error at line {}, column {column}: {message}",
                i + 1
            )),
            other => other.into(),
        })?;
        out.push(q);
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("{path} holds no queries")));
    }
    Ok(out)
}

pub fn probs(s: &Settings) -> Result<(), CliError> {
    let path = s.string("data")?;
    let (x, y) = read_raw(&path)?;
    let model = model_from(s)?;
    let queries = read_queries(&s.string("queries")?)?;
    let q: f64 = s.get("q")?;
    let (mx, my) = fit_margins(&x, &y, q).map_err(|e| CliError::from(e).context(format!("fitting margins of {path}")))?;
    let pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    let estimates: Vec<f64> = queries
        .par_iter()
        .map(|qr| model_probability(&mx, &my, &model, qr).map_err(|e| CliError::from(e).context(qr)))
        .collect::<Result<_, _>>()?;
    let b: usize = s.get("bootstrap")?;
    let seed: u64 = s.get("seed")?;
    let band = if b > 0 {
        let spec = BlockBootstrapSpec { block_length: s.get("block_length")?, replicates: b, seed };
        let band = block_bootstrap_ci(&pairs, &spec, |r| {
            queries.iter().map(|qr| Some(empirical_probability(r, qr).0).filter(|p| p.is_finite())).collect()
        })?;
        for w in &band.warnings {
            eprintln!("warning: {w}");
        }
        Some(band)
    } else {
        None
    };
    let rows: Vec<Vec<String>> = queries
        .iter()
        .enumerate()
        .map(|(j, qr)| {
            let (emp, count) = empirical_probability(&pairs, qr);
            let (lo, hi) = band.as_ref().map_or((None, None), |b| (b.lower[j], b.upper[j]));
            vec![qr.to_string(), num(estimates[j]), opt(emp.is_finite().then_some(emp)), opt(lo), opt(hi), count.to_string()]
        })
        .collect();
    let text = csv_text(&provenance(s, Some(seed))?, &PROBS_HEADER, &rows)?;
    emit(out_path(s, "out").as_deref(), &text)
}
