use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ebransac::config::{self, chain_seed, ConfigFile, ExperimentConfig, Method, PresetKind};
use ebransac::experiment::{self, RunReport};
use ebransac::io;
use ebransac_core::baselines::ClosedForm;
use ebransac_core::gibbs::{alternate_maximize, SelectionVector};
use ebransac_core::synth::generate;
use ebransac_core::theory::{self, DiscreteDistribution};
use ebransac_core::{rng, Error};
use serde_json::json;

#[derive(Parser)]
#[command(name = "ebransac", version, about = "Energy-based RANSAC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every method on each seed's dataset and compare against the truth.
    Fit(Common),
    /// One EB-RANSAC fit per (beta, seed).
    Sweep(Common),
    /// Population loss of the exponential model over a (beta, lambda) grid.
    Landscape {
        #[command(flatten)]
        common: Common,
        /// Lambda grid, as `start:stop:step` or a comma list.
        #[arg(long)]
        lambdas: Option<String>,
    },
    /// Locate the jump in a sweep column, per seed.
    Jump {
        /// A sweep.csv written by `ebransac sweep`.
        input: PathBuf,
        #[arg(long, default_value = "lambda")]
        column: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete-distribution oracle.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Alternating maximization of the joint model.
    #[command(subcommand)]
    Gibbs(GibbsCommand),
    /// Synthetic datasets.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Subcommand)]
enum TheoryCommand {
    /// Cut-off T_cut, scale zeta and minimizing distribution for q at beta.
    Tcut {
        /// Probabilities, comma separated.
        #[arg(long)]
        q: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        /// Also run the grid-search oracle at this resolution.
        #[arg(long)]
        brute_force: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GibbsCommand {
    /// Run the chain from a random initial selection and write a JSON-lines trace.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        rounds: usize,
        /// Initial selection as comma-separated point indices; random if absent.
        #[arg(long)]
        w0: Option<String>,
    },
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Write a preset dataset (CSV) and its metadata sidecar.
    Gen {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetKind>,
    /// Single seed (replaces the seed list).
    #[arg(long)]
    seed: Option<u64>,
    /// Seed list: `0..10` or a comma list.
    #[arg(long, conflicts_with = "seed")]
    seeds: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Beta grid: `start:stop:step` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    betas: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Output directory (a file path for `synth gen` and `gibbs run`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fit this dataset CSV instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    n_inliers: Option<usize>,
    #[arg(long)]
    n_outliers: Option<usize>,
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| anyhow!("bad value {t:?}: {e}")))
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, c] => Ok(config::grid(a.trim().parse()?, b.trim().parse()?, c.trim().parse()?)),
        [_] => parse_list(s),
        _ => bail!("grid must be start:stop:step or a comma list, got {s:?}"),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    match s.split_once("..") {
        Some((a, b)) => Ok((a.trim().parse()?..b.trim().parse()?).collect()),
        None => parse_list(s),
    }
}

impl Common {
    fn resolve(&self, fallback: PresetKind) -> Result<ExperimentConfig> {
        let mut file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        if self.preset.is_some() {
            if file.preset.is_some_and(|p| Some(p) != self.preset) {
                file.generator = None;
            }
            file.preset = self.preset;
        }
        let mut c = ExperimentConfig::from_file(&file, fallback)?;
        if let Some(s) = self.seed {
            c.seeds = vec![s];
        }
        if let Some(s) = &self.seeds {
            c.seeds = parse_seeds(s)?;
        }
        if let Some(b) = self.beta {
            c.beta = b;
        }
        if let Some(b) = &self.betas {
            c.betas = parse_grid(b)?;
        }
        if let Some(m) = &self.methods {
            c.methods = m.clone();
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if let Some(d) = &self.data {
            c.data_file = Some(d.clone());
        }
        if let Some(r) = self.restarts {
            c.restarts = r;
        }
        if let Some(n) = self.n_inliers {
            c.n_inliers = n;
        }
        if let Some(n) = self.n_outliers {
            c.n_outliers = n;
        }
        Ok(c)
    }
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn report(r: RunReport) -> usize {
    for f in &r.files {
        eprintln!("wrote {}", f.display());
    }
    if r.failures > 0 {
        eprintln!("{} cell(s) failed; see the error log", r.failures);
    }
    r.failures
}

fn tcut(q: &str, beta: f64, brute_force: Option<usize>, out: Option<&PathBuf>) -> Result<usize> {
    let q = DiscreteDistribution::new(parse_list(q)?)?;
    let sol = theory::solve_t_cut(&q, beta, theory::default_tol(&q))?;
    let mut v = json!({
        "q": q.probs(),
        "beta": beta,
        "t_cut": sol.t_cut,
        "zeta": sol.zeta,
        "p": sol.p.probs(),
        "loss": theory::discrete_ebr_loss(&q, &sol.p, beta),
    });
    if let Some(res) = brute_force {
        let bf = theory::brute_force_minimizer(&q, beta, res)?;
        v["brute_force"] = json!({
            "resolution": res,
            "p": bf.probs(),
            "loss": theory::discrete_ebr_loss(&q, &bf, beta),
        });
    }
    emit(out, &(serde_json::to_string_pretty(&v)? + "\n"))?;
    Ok(0)
}

fn gibbs_run(common: &Common, rounds: usize, w0: Option<&str>) -> Result<usize> {
    let c = common.resolve(PresetKind::Linreg)?;
    c.validate()?;
    let seed = c.seeds[0];
    let data = experiment::dataset(&c, seed)?;
    let n = data.len();
    let w0 = match w0 {
        Some(s) => SelectionVector::from_indices(n, &parse_list::<usize>(s)?)?,
        None => {
            let mut r = rng::stream(chain_seed(seed), 0);
            let k = c.ransac.hypo_size.min(n);
            SelectionVector::from_indices(n, &rand::seq::index::sample(&mut r, n, k).into_vec())?
        }
    };
    let model = c.preset.model();
    let mut lines = serde_json::to_string(&json!({ "config": c, "seed": seed, "w0": w0.indices() }))? + "\n";
    let (trace, error) = match alternate_maximize(model, &data, c.beta, w0, &ClosedForm, rounds) {
        Ok(t) => (t, None),
        Err(Error::ChainFailed { source, trace }) => (*trace, Some(source.to_string())),
        Err(e) => return Err(e.into()),
    };
    for r in &trace.rounds {
        lines += &serde_json::to_string(&json!({
            "round": r.round,
            "theta": r.theta,
            "selected": r.w.count(),
            "w": r.w.indices(),
            "log_density": r.log_density,
            "log_density_next_mask": r.log_density_next_mask,
        }))?;
        lines.push('\n');
    }
    lines += &serde_json::to_string(&json!({
        "converged": trace.converged,
        "rounds": trace.iterations(),
        "monotone": trace.is_monotone(1e-12),
        "error": error,
    }))?;
    lines.push('\n');
    let out = common.out.as_ref();
    emit(out, &lines)?;
    Ok(usize::from(error.is_some()))
}

fn synth_gen(common: &Common) -> Result<usize> {
    let c = common.resolve(PresetKind::Linreg)?;
    c.validate()?;
    let seed = c.seeds[0];
    let spec = c.spec(seed);
    let g = generate(&spec)?;
    let path = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}-seed{seed}.csv", c.preset.name())));
    io::save_generated(&path, &spec, &g)?;
    eprintln!("wrote {} and {}", path.display(), io::meta_path(&path).display());
    Ok(0)
}

fn jump(input: &Path, column: &str, out: Option<&PathBuf>) -> Result<usize> {
    let results = experiment::detect_jumps_in_sweep(input, column)?;
    let mut text = String::from("seed,beta_c,uncertainty,magnitude,status\n");
    let mut misses = 0;
    for (seed, r) in results {
        match r {
            Ok(j) => text += &format!("{seed},{},{},{},jump\n", j.beta_c, j.uncertainty, j.magnitude),
            Err(e) => {
                misses += 1;
                text += &format!("{seed},NaN,NaN,NaN,\"{e}\"\n");
            }
        }
    }
    emit(out, &text)?;
    Ok(misses)
}

fn run(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Fit(common) => Ok(report(experiment::run_fit(&common.resolve(PresetKind::Linreg)?)?)),
        Command::Sweep(common) => Ok(report(experiment::run_beta_sweep(
            &common.resolve(PresetKind::Exponential)?,
        )?)),
        Command::Landscape { common, lambdas } => {
            let mut c = common.resolve(PresetKind::Exponential)?;
            if common.betas.is_none() && common.config.is_none() {
                c.betas = vec![5.0, 6.5, 8.0];
            }
            if let Some(l) = lambdas {
                c.lambdas = parse_grid(&l)?;
            }
            Ok(report(experiment::run_landscape(&c)?))
        }
        Command::Jump { input, column, out } => jump(&input, &column, out.as_ref()),
        Command::Theory(TheoryCommand::Tcut {
            q,
            beta,
            brute_force,
            out,
        }) => tcut(&q, beta, brute_force, out.as_ref()),
        Command::Gibbs(GibbsCommand::Run { common, rounds, w0 }) => gibbs_run(&common, rounds, w0.as_deref()),
        Command::Synth(SynthCommand::Gen { common }) => synth_gen(&common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
