//! Classical comparators: RANSAC, LO-RANSAC and the closed-form estimators.
//!
//! RANSAC repeats three steps:
//! 1. fit a model on a random hypothetical-inlier set of `hypo_size` points;
//! 2. collect the consensus set `{μ : ℓ(θ̂; d_μ) < t_cons}`;
//! 3. if the consensus set has more than `min_consensus` points, score the
//!    model by its mean loss over the consensus set (LO-RANSAC refits on the
//!    consensus set first).
//!
//! The best-scoring model over all iterations wins.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::loss::{Dataset, LossModel};
use crate::math;
use crate::models::ClosedFormFit;
use crate::optim::{self, DescentOptions};
use crate::rng;
use crate::{Error, Result};

/// Ordinary least squares `y ≈ a·x + b`.
pub(crate) fn ols(pairs: impl Iterator<Item = (f64, f64)>) -> Result<(f64, f64)> {
    let pairs: Vec<(f64, f64)> = pairs.collect();
    if pairs.len() < 2 {
        return Err(Error::Degenerate("least squares needs at least two points"));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = pairs.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        let dx = x - mx;
        (sxx + dx * dx, sxy + dx * (y - my))
    });
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all x values are equal"));
    }
    let a = sxy / sxx;
    Ok((a, my - a * mx))
}

/// Sample mean and biased (1/N) standard deviation.
pub(crate) fn mean_and_std(xs: impl Iterator<Item = f64>) -> Result<(f64, f64)> {
    let xs: Vec<f64> = xs.collect();
    if xs.len() < 2 {
        return Err(Error::Degenerate("Gaussian MLE needs at least two points"));
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::Degenerate("zero variance"));
    }
    Ok((m, math::sqrt(var)))
}

/// `1 / mean`, for strictly positive samples.
pub(crate) fn inverse_mean(xs: impl Iterator<Item = f64>) -> Result<f64> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for x in xs {
        if !(x > 0.0) {
            return Err(Error::Degenerate("exponential MLE needs strictly positive data"));
        }
        n += 1;
        sum += x;
    }
    if n == 0 {
        return Err(Error::Degenerate("exponential MLE needs at least one point"));
    }
    Ok(n as f64 / sum)
}

/// Least-squares line `(a, b)`.
pub fn lms_fit(data: &Dataset) -> Result<(f64, f64)> {
    ols(data.points().iter().map(|p| (p.x(), p.y())))
}

/// `(m, σ)` with the biased standard deviation, the exact minimizer of the
/// mean Gaussian negative log-likelihood.
pub fn gaussian_mle(data: &Dataset) -> Result<(f64, f64)> {
    mean_and_std(data.points().iter().map(|p| p.x()))
}

/// `λ = 1 / mean(x)`.
pub fn exponential_mle(data: &Dataset) -> Result<f64> {
    inverse_mean(data.points().iter().map(|p| p.x()))
}

/// Minimizes the mean loss over an index subset.
pub trait SubsetSolver<M: ?Sized> {
    fn solve(&self, model: &M, data: &Dataset, subset: &[usize]) -> Result<Vec<f64>>;
}

/// Uses the model's closed-form minimizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForm;

impl<M: ClosedFormFit + ?Sized> SubsetSolver<M> for ClosedForm {
    fn solve(&self, model: &M, data: &Dataset, subset: &[usize]) -> Result<Vec<f64>> {
        model.fit_subset(data, subset)
    }
}

/// Gradient descent on the subset mean loss, for models without a closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentSolver {
    pub start: Vec<f64>,
    pub options: DescentOptions,
}

impl<M: LossModel + ?Sized> SubsetSolver<M> for DescentSolver {
    fn solve(&self, model: &M, data: &Dataset, subset: &[usize]) -> Result<Vec<f64>> {
        if subset.is_empty() {
            return Err(Error::InvalidInput("empty subset".into()));
        }
        model.check_theta(&self.start)?;
        let domain = model.domain();
        let pts = data.points();
        let n = subset.len() as f64;
        let mut theta = vec![0.0; domain.len()];
        let mut g = vec![0.0; domain.len()];
        let objective = |u: &[f64], grad: Option<&mut [f64]>| -> f64 {
            optim::to_natural_into(domain, u, &mut theta);
            if theta.iter().zip(domain).any(|(t, d)| !d.contains(*t)) {
                return f64::INFINITY;
            }
            let mut sum = 0.0;
            match grad {
                None => {
                    for &i in subset {
                        sum += model.point_loss(&theta, &pts[i]);
                    }
                }
                Some(grad) => {
                    grad.iter_mut().for_each(|v| *v = 0.0);
                    for &i in subset {
                        sum += model.point_loss(&theta, &pts[i]);
                        model.point_loss_grad(&theta, &pts[i], &mut g);
                        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b / n);
                    }
                    optim::chain_to_unconstrained(domain, &theta, grad);
                }
            }
            sum / n
        };
        let out = optim::minimize(objective, optim::to_unconstrained(domain, &self.start), &self.options);
        if !out.value.is_finite() {
            return Err(Error::Degenerate("subset descent diverged"));
        }
        Ok(optim::to_natural(domain, &out.x))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RansacConfig {
    /// Size of the hypothetical-inlier set.
    pub hypo_size: usize,
    pub iterations: usize,
    /// Consensus membership requires `ℓ < t_cons`.
    pub t_cons: f64,
    /// The consensus set must be strictly larger than this.
    pub min_consensus: usize,
    /// Refit on the consensus set before scoring (LO-RANSAC).
    pub local_opt: bool,
    pub rng_seed: u64,
}

impl RansacConfig {
    /// `⌈N/2⌉`, the default consensus-size threshold.
    pub fn default_min_consensus(n: usize) -> usize {
        n.div_ceil(2)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.hypo_size == 0 || self.hypo_size > n {
            return Err(Error::InvalidConfig(alloc::format!(
                "hypo_size must be in 1..={n}, got {}",
                self.hypo_size
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.t_cons.is_nan() {
            return Err(Error::InvalidConfig("t_cons is NaN".into()));
        }
        Ok(())
    }
}

/// Diagnostics of one RANSAC iteration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RansacIteration {
    pub index: usize,
    pub sample: Vec<usize>,
    /// Model that was scored (after refitting, for LO-RANSAC).
    pub theta: Option<Vec<f64>>,
    pub consensus_size: usize,
    pub score: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RansacFit {
    pub theta: Vec<f64>,
    /// Mean loss over the consensus set; lower is better.
    pub score: f64,
    pub consensus_mask: Vec<bool>,
    pub best_iteration: usize,
    pub iterations: Vec<RansacIteration>,
}

impl RansacFit {
    pub fn consensus_size(&self) -> usize {
        self.consensus_mask.iter().filter(|&&b| b).count()
    }
}

struct Candidate {
    score: f64,
    size: usize,
    iteration: usize,
    theta: Vec<f64>,
    mask: Vec<bool>,
}

/// Runs one RANSAC iteration. Iteration `i` samples from RNG stream `i`.
pub fn ransac_iteration<M, S>(
    model: &M,
    data: &Dataset,
    config: &RansacConfig,
    solver: &S,
    index: usize,
) -> (RansacIteration, Option<Vec<bool>>)
where
    M: LossModel + ?Sized,
    S: SubsetSolver<M> + ?Sized,
{
    let n = data.len();
    let mut rng = rng::stream(config.rng_seed, index as u64);
    let mut sample = rand::seq::index::sample(&mut rng, n, config.hypo_size).into_vec();
    sample.sort_unstable();
    let mut it = RansacIteration {
        index,
        sample,
        theta: None,
        consensus_size: 0,
        score: None,
        note: None,
    };
    let hypothesis = match solver.solve(model, data, &it.sample) {
        Ok(t) => t,
        Err(e) => {
            it.note = Some(alloc::format!("hypothesis fit failed: {e}"));
            return (it, None);
        }
    };
    let mask: Vec<bool> = data
        .points()
        .iter()
        .map(|p| model.point_loss(&hypothesis, p) < config.t_cons)
        .collect();
    let consensus: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    it.consensus_size = consensus.len();
    if consensus.len() <= config.min_consensus {
        it.theta = Some(hypothesis);
        return (it, None);
    }
    let theta = if config.local_opt {
        match solver.solve(model, data, &consensus) {
            Ok(t) => t,
            Err(e) => {
                it.note = Some(alloc::format!("consensus refit failed, scoring hypothesis: {e}"));
                hypothesis
            }
        }
    } else {
        hypothesis
    };
    let pts = data.points();
    let score = math::mean(consensus.iter().map(|&i| model.point_loss(&theta, &pts[i])));
    it.theta = Some(theta);
    if score.is_finite() {
        it.score = Some(score);
        (it, Some(mask))
    } else {
        it.note = Some("non-finite consensus score".into());
        (it, None)
    }
}

/// RANSAC (or LO-RANSAC with `config.local_opt`).
///
/// Ties in score go to the larger consensus set, then the earlier iteration.
pub fn ransac_fit<M, S>(model: &M, data: &Dataset, config: &RansacConfig, solver: &S) -> Result<RansacFit>
where
    M: LossModel + ?Sized,
    S: SubsetSolver<M> + ?Sized,
{
    config.validate(data.len())?;
    let runs = (0..config.iterations)
        .map(|i| ransac_iteration(model, data, config, solver, i))
        .collect();
    select_ransac(config, runs)
}

/// Reduces per-iteration results (in any order) to the best model.
pub fn select_ransac(config: &RansacConfig, mut runs: Vec<(RansacIteration, Option<Vec<bool>>)>) -> Result<RansacFit> {
    runs.sort_by_key(|(it, _)| it.index);
    let mut best: Option<Candidate> = None;
    for (it, mask) in &runs {
        let (Some(mask), Some(score), Some(theta)) = (mask, it.score, it.theta.as_ref()) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => score < b.score || (score == b.score && it.consensus_size > b.size),
        };
        if better {
            best = Some(Candidate {
                score,
                size: it.consensus_size,
                iteration: it.index,
                theta: theta.clone(),
                mask: mask.clone(),
            });
        }
    }
    let iterations: Vec<RansacIteration> = runs.into_iter().map(|(it, _)| it).collect();
    match best {
        Some(b) => Ok(RansacFit {
            theta: b.theta,
            score: b.score,
            consensus_mask: b.mask,
            best_iteration: b.iteration,
            iterations,
        }),
        None => Err(Error::NoConsensus {
            min_consensus: config.min_consensus,
            iterations,
        }),
    }
}
