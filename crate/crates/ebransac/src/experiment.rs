//! Fits, β-sweeps, landscape scans and jump detection over the presets.
//!
//! Every function here comes in two layers: a pure computation returning
//! rows, and a `run_*` wrapper that writes them under `config.out`. Output
//! CSVs start with `#` comment lines holding the resolved config and seeds;
//! rows are always written in grid order, so identical configs give
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ebransac_core::baselines::{ClosedForm, RansacFit};
use ebransac_core::ebr::FitResult;
use ebransac_core::models::{kld_gaussian, population_ebr_loss};
use ebransac_core::synth::generate;
use ebransac_core::Dataset;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Method, PresetKind};
use crate::{io, parallel};

/// Accuracy of `theta` against the true parameters: mean squared error for
/// regression, `KL(fit ‖ truth)` for the Gaussian, `|λ - rate|` for the
/// exponential.
pub fn metric(kind: PresetKind, truth: &[f64], theta: &[f64]) -> f64 {
    match kind {
        PresetKind::Linreg => theta.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / truth.len() as f64,
        PresetKind::Gaussian => kld_gaussian((theta[0], theta[1]), (truth[0], truth[1])).unwrap_or(f64::NAN),
        PresetKind::Exponential => (theta[0] - truth[0]).abs(),
    }
}

/// One estimator's output on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodFit {
    Ebr(FitResult),
    Ransac(RansacFit),
    Classical(Vec<f64>),
}

impl MethodFit {
    pub fn theta(&self) -> &[f64] {
        match self {
            Self::Ebr(f) => &f.theta,
            Self::Ransac(f) => &f.theta,
            Self::Classical(t) => t,
        }
    }

    fn to_json(&self) -> Value {
        let v = match self {
            Self::Ebr(f) => serde_json::to_value(f),
            Self::Ransac(f) => serde_json::to_value(f),
            Self::Classical(t) => Ok(json!({ "theta": t })),
        };
        v.unwrap_or_else(|e| json!({ "error": e.to_string() }))
    }
}

/// Loads or generates the dataset for `seed`.
pub fn dataset(config: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    match &config.data_file {
        Some(path) => Ok(io::load_dataset(path)?.0),
        None => Ok(generate(&config.spec(seed))?.dataset),
    }
}

/// Fits `method` with the config's settings. `beta` overrides `config.beta`.
pub fn fit_method(
    config: &ExperimentConfig,
    data: &Dataset,
    seed: u64,
    method: Method,
    beta: f64,
) -> Result<MethodFit> {
    let model = config.preset.model();
    Ok(match method {
        Method::Ebr => MethodFit::Ebr(parallel::fit(model, data, &config.ebr(beta, seed))?),
        Method::Ransac | Method::LoRansac => {
            let rc = config.ransac(data.len(), seed, method == Method::LoRansac);
            MethodFit::Ransac(parallel::ransac_fit(model, data, &rc, &ClosedForm)?)
        }
        Method::Classical => {
            let all: Vec<usize> = (0..data.len()).collect();
            MethodFit::Classical(model.fit_subset(data, &all)?)
        }
    })
}

/// Settings actually used by `method`, for the JSON reports.
fn method_config(config: &ExperimentConfig, n: usize, seed: u64, method: Method, beta: f64) -> Value {
    let v = match method {
        Method::Ebr => serde_json::to_value(config.ebr(beta, seed)),
        Method::Ransac | Method::LoRansac => serde_json::to_value(config.ransac(n, seed, method == Method::LoRansac)),
        Method::Classical => Ok(Value::Null),
    };
    v.unwrap_or(Value::Null)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub seed: u64,
    pub method: Method,
    /// Size of the dataset the method saw.
    pub n: usize,
    pub fit: Result<MethodFit, String>,
    /// NaN when the fit failed or no ground truth is known.
    pub metric: f64,
}

fn has_truth(config: &ExperimentConfig) -> bool {
    config.data_file.is_none()
}

/// Fits every method on every seed's dataset. Failures stay in their row.
pub fn compare(config: &ExperimentConfig) -> Result<Vec<ComparisonRow>> {
    config.validate()?;
    let truth = config.truth();
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let data = dataset(config, seed)?;
        for &method in &config.methods {
            let fit = fit_method(config, &data, seed, method, config.beta).map_err(|e| format!("{e:#}"));
            let metric = match (&fit, has_truth(config)) {
                (Ok(f), true) => metric(config.preset, &truth, f.theta()),
                _ => f64::NAN,
            };
            rows.push(ComparisonRow {
                seed,
                method,
                n: data.len(),
                fit,
                metric,
            });
        }
    }
    Ok(rows)
}

/// Summary of a command that writes files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Cells or methods that failed; the rest of the run is still written.
    pub failures: usize,
}

fn header(verb: &str, config: &ExperimentConfig) -> String {
    let cfg = serde_json::to_string(config).expect("config serializes");
    let seeds = serde_json::to_string(&config.seeds).expect("seeds serialize");
    format!("# ebransac {verb}\n# config: {cfg}\n# seeds: {seeds}\n")
}

fn num(v: f64) -> String {
    v.to_string()
}

fn csv_line(fields: &[String]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(fields)?;
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// `compare`, then one JSON report per (seed, method) and `comparison.csv`.
pub fn run_fit(config: &ExperimentConfig) -> Result<RunReport> {
    let rows = compare(config)?;
    let kind = config.preset;
    let mut files = Vec::new();
    let mut failures = 0;
    let mut body = header("fit", config);
    let mut cols: Vec<String> = vec!["seed".into(), "method".into()];
    cols.extend(kind.param_names().iter().map(|s| s.to_string()));
    cols.extend([kind.metric_name().to_string(), "status".into(), "error".into()]);
    body += &csv_line(&cols)?;

    for row in &rows {
        let mcfg = method_config(config, row.n, row.seed, row.method, config.beta);
        let mut report = match &row.fit {
            Ok(f) => f.to_json(),
            Err(e) => json!({ "error": e }),
        };
        if let Value::Object(m) = &mut report {
            m.insert(
                "config".into(),
                json!({ "method": mcfg, "experiment": config, "seed": row.seed }),
            );
        }
        let path = config
            .out
            .join(format!("{}-seed{}-{}.json", kind.name(), row.seed, row.method.name()));
        write_file(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
        files.push(path);

        let mut line = vec![row.seed.to_string(), row.method.name().to_string()];
        match &row.fit {
            Ok(f) => {
                line.extend(f.theta().iter().map(|&v| num(v)));
                line.extend([num(row.metric), "ok".into(), String::new()]);
            }
            Err(e) => {
                failures += 1;
                line.extend(kind.param_names().iter().map(|_| num(f64::NAN)));
                line.extend([num(f64::NAN), "error".into(), e.clone()]);
            }
        }
        body += &csv_line(&line)?;
    }
    let path = config.out.join("comparison.csv");
    write_file(&path, &body)?;
    files.push(path);
    Ok(RunReport { files, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub seed: u64,
    /// NaN-filled when the fit failed.
    pub theta: Vec<f64>,
    pub ebr_loss: f64,
    pub metric: f64,
    /// Metric of each non-EB-RANSAC method on the same dataset, in
    /// `config.methods` order. Constant along β.
    pub reference: Vec<f64>,
    pub error: Option<String>,
}

fn reference_methods(config: &ExperimentConfig) -> Vec<Method> {
    config.methods.iter().copied().filter(|&m| m != Method::Ebr).collect()
}

/// One EB-RANSAC fit per (β, seed), in parallel, returned sorted by
/// (β, seed) in grid order.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let truth = config.truth();
    let refs = reference_methods(config);
    let datasets: Vec<(u64, Dataset)> = config
        .seeds
        .iter()
        .map(|&s| dataset(config, s).map(|d| (s, d)))
        .collect::<Result<_>>()?;
    let reference: Vec<Vec<(f64, Option<String>)>> = datasets
        .iter()
        .map(|(seed, data)| {
            refs.iter()
                .map(|&m| match fit_method(config, data, *seed, m, config.beta) {
                    Ok(f) if has_truth(config) => (metric(config.preset, &truth, f.theta()), None),
                    Ok(_) => (f64::NAN, None),
                    Err(e) => (f64::NAN, Some(format!("{}: {e:#}", m.name()))),
                })
                .collect()
        })
        .collect();

    let cells: Vec<(usize, usize)> = (0..config.betas.len())
        .flat_map(|b| (0..datasets.len()).map(move |s| (b, s)))
        .collect();
    let dim = config.preset.model().param_dim();
    let rows = cells
        .into_par_iter()
        .map(|(b, s)| {
            let beta = config.betas[b];
            let (seed, data) = &datasets[s];
            let ref_metrics: Vec<f64> = reference[s].iter().map(|r| r.0).collect();
            let ref_errors: Vec<String> = reference[s].iter().filter_map(|r| r.1.clone()).collect();
            let mut row = SweepRow {
                beta,
                seed: *seed,
                theta: vec![f64::NAN; dim],
                ebr_loss: f64::NAN,
                metric: f64::NAN,
                reference: ref_metrics,
                error: None,
            };
            let mut errors = ref_errors;
            match fit_method(config, data, *seed, Method::Ebr, beta) {
                Ok(MethodFit::Ebr(f)) => {
                    if has_truth(config) {
                        row.metric = metric(config.preset, &truth, &f.theta);
                    }
                    row.theta = f.theta;
                    row.ebr_loss = f.ebr_loss;
                }
                Ok(_) => unreachable!("Ebr fit returns an EB-RANSAC result"),
                Err(e) => errors.push(format!("ebr: {e:#}")),
            }
            if !errors.is_empty() {
                row.error = Some(errors.join("; "));
            }
            row
        })
        .collect();
    Ok(rows)
}

/// `sweep`, written as `sweep.csv` plus `sweep_errors.log`.
pub fn run_beta_sweep(config: &ExperimentConfig) -> Result<RunReport> {
    let rows = sweep(config)?;
    let kind = config.preset;
    let mut body = header("sweep", config);
    let mut cols: Vec<String> = vec!["beta".into(), "seed".into()];
    cols.extend(kind.param_names().iter().map(|s| s.to_string()));
    cols.extend(["ebr_loss".to_string(), kind.metric_name().to_string()]);
    cols.extend(
        reference_methods(config)
            .iter()
            .map(|m| format!("{}_{}", m.name().replace('-', "_"), kind.metric_name())),
    );
    body += &csv_line(&cols)?;
    let mut log = header("sweep errors", config);
    let mut failures = 0;
    for r in &rows {
        let mut line = vec![num(r.beta), r.seed.to_string()];
        line.extend(r.theta.iter().map(|&v| num(v)));
        line.extend([num(r.ebr_loss), num(r.metric)]);
        line.extend(r.reference.iter().map(|&v| num(v)));
        body += &csv_line(&line)?;
        if let Some(e) = &r.error {
            failures += 1;
            let _ = writeln!(log, "beta={} seed={}: {e}", r.beta, r.seed);
        }
    }
    let csv_path = config.out.join("sweep.csv");
    let log_path = config.out.join("sweep_errors.log");
    write_file(&csv_path, &body)?;
    write_file(&log_path, &log)?;
    Ok(RunReport {
        files: vec![csv_path, log_path],
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandscapePoint {
    pub beta: f64,
    pub lambda: f64,
    /// NaN when the quadrature failed.
    pub value: f64,
}

/// A grid-local minimum of one β slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridMinimum {
    pub beta: f64,
    pub lambda: f64,
    pub value: f64,
    pub global: bool,
}

/// The population loss over `config.lambdas × config.betas`, plus per-cell
/// quadrature errors.
pub fn landscape(config: &ExperimentConfig) -> Result<(Vec<LandscapePoint>, Vec<String>)> {
    config.validate()?;
    let Some(mix) = config.mixture() else {
        bail!("landscape scans need the exponential preset");
    };
    let cells: Vec<(f64, f64)> = config
        .betas
        .iter()
        .flat_map(|&b| config.lambdas.iter().map(move |&l| (b, l)))
        .collect();
    let out: Vec<(LandscapePoint, Option<String>)> = cells
        .into_par_iter()
        .map(|(beta, lambda)| match population_ebr_loss(lambda, beta, &mix) {
            Ok(value) => (LandscapePoint { beta, lambda, value }, None),
            Err(e) => (
                LandscapePoint {
                    beta,
                    lambda,
                    value: f64::NAN,
                },
                Some(format!("beta={beta} lambda={lambda}: {e}")),
            ),
        })
        .collect();
    let errors = out.iter().filter_map(|(_, e)| e.clone()).collect();
    Ok((out.into_iter().map(|(p, _)| p).collect(), errors))
}

/// Interior grid-local minima of each β slice (plus endpoints that are lower
/// than their single neighbour). `points` must be grouped by β with λ
/// increasing, as [`landscape`] returns them.
pub fn local_minima(points: &[LandscapePoint]) -> Vec<GridMinimum> {
    let mut out = Vec::new();
    for slice in points.chunk_by(|a, b| a.beta == b.beta) {
        let v: Vec<f64> = slice.iter().map(|p| p.value).collect();
        let global = v
            .iter()
            .enumerate()
            .filter(|(_, x)| x.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i);
        for i in 0..v.len() {
            let left = i == 0 || v[i] < v[i - 1];
            let right = i + 1 == v.len() || v[i] < v[i + 1];
            if v[i].is_finite() && left && right && v.len() > 1 {
                out.push(GridMinimum {
                    beta: slice[i].beta,
                    lambda: slice[i].lambda,
                    value: v[i],
                    global: Some(i) == global,
                });
            }
        }
    }
    out
}

/// `landscape`, written as `landscape.csv`, `landscape_minima.csv` and
/// `landscape_errors.log`.
pub fn run_landscape(config: &ExperimentConfig) -> Result<RunReport> {
    let (points, errors) = landscape(config)?;
    let mut body = header("landscape", config) + &csv_line(&["beta".into(), "lambda".into(), "value".into()])?;
    for p in &points {
        body += &csv_line(&[num(p.beta), num(p.lambda), num(p.value)])?;
    }
    let mut minima = header("landscape minima", config)
        + &csv_line(&["beta".into(), "lambda".into(), "value".into(), "global".into()])?;
    for m in local_minima(&points) {
        minima += &csv_line(&[num(m.beta), num(m.lambda), num(m.value), m.global.to_string()])?;
    }
    let mut log = header("landscape errors", config);
    for e in &errors {
        log += e;
        log.push('\n');
    }
    let paths = [
        config.out.join("landscape.csv"),
        config.out.join("landscape_minima.csv"),
        config.out.join("landscape_errors.log"),
    ];
    for (p, b) in paths.iter().zip([&body, &minima, &log]) {
        write_file(p, b)?;
    }
    Ok(RunReport {
        files: paths.to_vec(),
        failures: errors.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    /// Midpoint of the grid interval with the largest change.
    pub beta_c: f64,
    /// Width of that interval.
    pub uncertainty: f64,
    /// `|Δ|` across that interval.
    pub magnitude: f64,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JumpError {
    #[error("no jump detected: largest change {largest} is not above 3 x median change {median}")]
    NoJump { largest: f64, median: f64 },
    #[error("need at least two finite points, got {0}")]
    TooFewPoints(usize),
    #[error("beta grid is not strictly increasing")]
    Unsorted,
}

/// Locates the largest jump of `values` along the `betas` grid.
///
/// Non-finite values (failed fits) are dropped first. A jump is reported only
/// if its `|Δ|` exceeds three times the median `|Δ|` over all intervals.
pub fn detect_jump(betas: &[f64], values: &[f64]) -> Result<Jump, JumpError> {
    let pts: Vec<(f64, f64)> = betas
        .iter()
        .zip(values)
        .filter(|(b, v)| b.is_finite() && v.is_finite())
        .map(|(&b, &v)| (b, v))
        .collect();
    if pts.len() < 2 {
        return Err(JumpError::TooFewPoints(pts.len()));
    }
    if pts.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(JumpError::Unsorted);
    }
    let deltas: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let (k, &largest) = deltas
        .iter()
        .enumerate()
        .fold((0, &deltas[0]), |best, (i, d)| if *d > *best.1 { (i, d) } else { best });
    let mut sorted = deltas.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    if !(largest > 3.0 * median) {
        return Err(JumpError::NoJump { largest, median });
    }
    let ((b0, v0), (b1, v1)) = (pts[k], pts[k + 1]);
    Ok(Jump {
        beta_c: 0.5 * (b0 + b1),
        uncertainty: b1 - b0,
        magnitude: largest,
        before: v0,
        after: v1,
    })
}

/// Reads a sweep CSV and runs [`detect_jump`] on `column` for each seed.
pub fn detect_jumps_in_sweep(path: &Path, column: &str) -> Result<Vec<(u64, Result<Jump, JumpError>)>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = r.headers()?.clone();
    let idx = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{} has no column {name:?}", path.display()))
    };
    let (bi, si, ci) = (idx("beta")?, idx("seed")?, idx(column)?);
    let mut by_seed: Vec<(u64, Vec<f64>, Vec<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .with_context(|| format!("bad number {:?}", &rec[i]))
        };
        let seed: u64 = rec[si].parse().with_context(|| format!("bad seed {:?}", &rec[si]))?;
        let (b, v) = (parse(bi)?, parse(ci)?);
        match by_seed.iter_mut().find(|e| e.0 == seed) {
            Some(e) => {
                e.1.push(b);
                e.2.push(v);
            }
            None => by_seed.push((seed, vec![b], vec![v])),
        }
    }
    Ok(by_seed
        .into_iter()
        .map(|(seed, b, v)| (seed, detect_jump(&b, &v)))
        .collect())
}
