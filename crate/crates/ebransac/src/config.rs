//! Experiment configuration: preset defaults, TOML overlay, validation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ebransac_core::baselines::RansacConfig;
use ebransac_core::ebr::{EbrConfig, InitSampler};
use ebransac_core::models::{
    ClosedFormFit, ExponentialMixture, ExponentialModel, GaussianModel, LinearRegressionModel,
};
use ebransac_core::optim::DescentOptions;
use ebransac_core::synth::{Preset, PresetSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PresetKind {
    Linreg,
    Gaussian,
    Exponential,
}

impl PresetKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Linreg => "linreg",
            Self::Gaussian => "gaussian",
            Self::Exponential => "exponential",
        }
    }

    pub fn model(self) -> &'static (dyn ClosedFormFit + Sync) {
        match self {
            Self::Linreg => &LinearRegressionModel,
            Self::Gaussian => &GaussianModel,
            Self::Exponential => &ExponentialModel,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Self::Linreg => &["a", "b"],
            Self::Gaussian => &["m", "sigma"],
            Self::Exponential => &["lambda"],
        }
    }

    /// Column name of the accuracy metric reported against the true parameters.
    pub fn metric_name(self) -> &'static str {
        match self {
            Self::Linreg => "mse",
            Self::Gaussian => "kld",
            Self::Exponential => "abs_rate_error",
        }
    }

    pub fn spec(self, seed: u64) -> PresetSpec {
        match self {
            Self::Linreg => PresetSpec::linreg(seed),
            Self::Gaussian => PresetSpec::gaussian(seed),
            Self::Exponential => PresetSpec::exponential(seed),
        }
    }

    fn of(preset: &Preset) -> Self {
        match preset {
            Preset::Linreg { .. } => Self::Linreg,
            Preset::Gaussian { .. } => Self::Gaussian,
            Preset::Exponential { .. } => Self::Exponential,
        }
    }

    fn default_init(self) -> InitSampler {
        let (lower, upper) = match self {
            Self::Linreg => (vec![-5.0, -5.0], vec![5.0, 10.0]),
            Self::Gaussian => (vec![-3.0, 0.05], vec![3.0, 1.0]),
            Self::Exponential => (vec![0.05], vec![5.0]),
        };
        InitSampler::UniformBox { lower, upper }
    }

    fn default_ransac(self) -> RansacSettings {
        let (hypo_size, t_cons) = match self {
            Self::Linreg => (2, 0.05),
            Self::Gaussian => (3, 1.0),
            Self::Exponential => (2, 2.0),
        };
        RansacSettings {
            hypo_size,
            iterations: 200,
            t_cons,
            min_consensus: None,
        }
    }

    fn default_beta(self) -> f64 {
        match self {
            Self::Exponential => 4.0,
            _ => 5.0,
        }
    }

    fn default_betas(self) -> Vec<f64> {
        match self {
            Self::Linreg => grid(0.0, 100.0, 2.5),
            Self::Gaussian => grid(-2.0, 6.0, 0.5),
            Self::Exponential => grid(4.0, 8.0, 0.05),
        }
    }
}

/// The estimation methods an experiment can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ebr,
    Ransac,
    LoRansac,
    Classical,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ebr => "ebr",
            Self::Ransac => "ransac",
            Self::LoRansac => "lo-ransac",
            Self::Classical => "classical",
        }
    }

    /// Salt mixed into the dataset seed so each estimator gets its own RNG.
    fn salt(self) -> u64 {
        match self {
            Self::Ebr => 1,
            Self::Ransac => 2,
            Self::LoRansac => 3,
            Self::Classical => 4,
        }
    }
}

fn salted(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn estimator_seed(seed: u64, method: Method) -> u64 {
    salted(seed, method.salt())
}

/// Seed for drawing the initial selection of an alternating-maximization chain.
pub fn chain_seed(seed: u64) -> u64 {
    salted(seed, 5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RansacSettings {
    pub hypo_size: usize,
    pub iterations: usize,
    pub t_cons: f64,
    /// Defaults to `⌈N/2⌉`.
    #[serde(default)]
    pub min_consensus: Option<usize>,
}

/// `start, start + step, ...` up to `stop` (inclusive, within rounding).
///
/// Each point is `start + i·step`, so long grids do not accumulate error.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || !(stop >= start) {
        return vec![start];
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Either an explicit list or `{ start, stop, step }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridInput {
    List(Vec<f64>),
    Range(GridSpec),
}

impl GridInput {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range(g) => grid(g.start, g.stop, g.step),
        }
    }
}

/// A fully resolved experiment. Every output file embeds this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: PresetKind,
    /// Generator parameters; `preset` fixes the variant.
    pub generator: Preset,
    pub n_inliers: usize,
    pub n_outliers: usize,
    /// When set, fits this CSV instead of generating data; seeds then only
    /// drive the estimators.
    pub data_file: Option<PathBuf>,
    pub beta: f64,
    pub betas: Vec<f64>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub restarts: usize,
    pub descent: DescentOptions,
    pub init: InitSampler,
    pub ransac: RansacSettings,
    pub lambdas: Vec<f64>,
}

/// Optional overrides, as read from a TOML file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<PresetKind>,
    pub generator: Option<Preset>,
    pub n_inliers: Option<usize>,
    pub n_outliers: Option<usize>,
    pub data_file: Option<PathBuf>,
    pub beta: Option<f64>,
    pub betas: Option<GridInput>,
    pub methods: Option<Vec<Method>>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub restarts: Option<usize>,
    pub descent: Option<DescentOptions>,
    pub init: Option<InitSampler>,
    pub ransac: Option<RansacSettings>,
    pub lambdas: Option<GridInput>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

impl ExperimentConfig {
    pub fn preset_defaults(kind: PresetKind) -> Self {
        let spec = kind.spec(0);
        Self {
            preset: kind,
            generator: spec.preset,
            n_inliers: spec.n_inliers,
            n_outliers: spec.n_outliers,
            data_file: None,
            beta: kind.default_beta(),
            betas: kind.default_betas(),
            methods: vec![Method::Ebr, Method::Ransac, Method::LoRansac, Method::Classical],
            seeds: vec![0],
            out: PathBuf::from("results"),
            restarts: 30,
            descent: DescentOptions::default(),
            init: kind.default_init(),
            ransac: kind.default_ransac(),
            lambdas: grid(0.05, 5.0, 0.01),
        }
    }

    /// Starts from the defaults of the file's preset (or `fallback`) and
    /// applies every field the file sets.
    pub fn from_file(file: &ConfigFile, fallback: PresetKind) -> Result<Self> {
        let kind = match (&file.preset, &file.generator) {
            (Some(k), _) => *k,
            (None, Some(g)) => PresetKind::of(g),
            (None, None) => fallback,
        };
        let mut c = Self::preset_defaults(kind);
        if let Some(g) = &file.generator {
            if PresetKind::of(g) != kind {
                bail!("generator {:?} does not match preset {}", g.name(), kind.name());
            }
            c.generator = g.clone();
        }
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = &file.$f { c.$f = v.clone(); })*};
        }
        take!(n_inliers, n_outliers, beta, methods, seeds, out, restarts, descent, init, ransac);
        if file.data_file.is_some() {
            c.data_file = file.data_file.clone();
        }
        if let Some(b) = &file.betas {
            c.betas = b.values();
        }
        if let Some(l) = &file.lambdas {
            c.lambdas = l.values();
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        if self.methods.is_empty() {
            bail!("at least one method is required");
        }
        if !self.beta.is_finite() {
            bail!("beta must be finite");
        }
        check_increasing("beta grid", &self.betas)?;
        check_increasing("lambda grid", &self.lambdas)?;
        if self.lambdas.iter().any(|&l| !(l > 0.0)) {
            bail!("lambda grid must be positive");
        }
        if PresetKind::of(&self.generator) != self.preset {
            bail!("generator does not match preset {}", self.preset.name());
        }
        self.spec(0).validate()?;
        self.ebr(self.beta, 0).validate(self.preset.model().domain())?;
        if self.ransac.hypo_size == 0 || self.ransac.iterations == 0 {
            bail!("ransac hypo_size and iterations must be positive");
        }
        Ok(())
    }

    pub fn spec(&self, seed: u64) -> PresetSpec {
        PresetSpec {
            preset: self.generator.clone(),
            n_inliers: self.n_inliers,
            n_outliers: self.n_outliers,
            seed,
        }
    }

    pub fn truth(&self) -> Vec<f64> {
        self.generator.truth()
    }

    pub fn ebr(&self, beta: f64, seed: u64) -> EbrConfig {
        EbrConfig {
            beta,
            restarts: self.restarts,
            init: self.init.clone(),
            descent: self.descent,
            rng_seed: estimator_seed(seed, Method::Ebr),
        }
    }

    pub fn ransac(&self, n: usize, seed: u64, local_opt: bool) -> RansacConfig {
        let method = if local_opt { Method::LoRansac } else { Method::Ransac };
        RansacConfig {
            hypo_size: self.ransac.hypo_size,
            iterations: self.ransac.iterations,
            t_cons: self.ransac.t_cons,
            min_consensus: self
                .ransac
                .min_consensus
                .unwrap_or_else(|| RansacConfig::default_min_consensus(n)),
            local_opt,
            rng_seed: estimator_seed(seed, method),
        }
    }

    /// The population mixture matching the exponential generator.
    pub fn mixture(&self) -> Option<ExponentialMixture> {
        match self.generator {
            Preset::Exponential {
                rate,
                outlier_lo,
                outlier_hi,
            } => Some(ExponentialMixture {
                inlier_ratio: self.n_inliers as f64 / (self.n_inliers + self.n_outliers) as f64,
                rate,
                outlier_lo,
                outlier_hi,
            }),
            _ => None,
        }
    }
}

fn check_increasing(what: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        bail!("{what} is empty");
    }
    if v.iter().any(|x| !x.is_finite()) {
        bail!("{what} has non-finite values");
    }
    if v.windows(2).any(|w| !(w[0] < w[1])) {
        bail!("{what} must be strictly increasing");
    }
    Ok(())
}
