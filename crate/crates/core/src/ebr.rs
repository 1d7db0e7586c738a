//! The EB-RANSAC estimator.
//!
//! Summing the selection vector `w` out of the joint model leaves the
//! marginal `P(θ | D, β) ∝ exp(Σ_μ softplus(β - ℓ_μ)) - 1`. Because `exp` is
//! increasing, maximizing it is the same as minimizing
//!
//! ```text
//! L_ER(θ; D, β) = -(1/N) Σ_μ softplus(β - ℓ(θ; d_μ))
//! ```
//!
//! so the `-1` never enters the objective. Points with `ℓ_μ ≪ β` contribute
//! like ordinary loss terms; points with `ℓ_μ ≫ β` contribute almost nothing,
//! which is where the robustness comes from.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::loss::{point_losses, Dataset, LossModel, ParamDomain};
use crate::math::{self, sigmoid, softplus, softplus_and_sigmoid};
use crate::optim::{self, DescentOptions};
use crate::rng;
use crate::{Error, Result};

/// How restart initial points are drawn.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum InitSampler {
    /// Per-coordinate uniform over `[lower_i, upper_i]`, in natural parameters.
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    /// Gaussian around a pilot estimate, in the unconstrained parameterization
    /// (log-normal for positive coordinates).
    Gaussian { center: Vec<f64>, scale: Vec<f64> },
}

impl InitSampler {
    fn validate(&self, domain: &[ParamDomain]) -> Result<()> {
        let k = domain.len();
        match self {
            Self::UniformBox { lower, upper } => {
                if lower.len() != k || upper.len() != k {
                    return Err(Error::InvalidConfig(format!("init box must have {k} coordinates")));
                }
                for ((lo, hi), d) in lower.iter().zip(upper).zip(domain) {
                    if !(lo <= hi) || !d.contains(*lo) || !d.contains(*hi) {
                        return Err(Error::InvalidConfig(format!(
                            "init box [{lo}, {hi}] is empty or leaves the parameter domain"
                        )));
                    }
                }
            }
            Self::Gaussian { center, scale } => {
                if center.len() != k || scale.len() != k {
                    return Err(Error::InvalidConfig(format!("init Gaussian must have {k} coordinates")));
                }
                if center.iter().zip(domain).any(|(c, d)| !d.contains(*c))
                    || scale.iter().any(|s| !(*s >= 0.0) || !s.is_finite())
                {
                    return Err(Error::InvalidConfig(
                        "init Gaussian needs an in-domain center and non-negative scales".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, domain: &[ParamDomain], rng: &mut R) -> Vec<f64> {
        match self {
            Self::UniformBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
            Self::Gaussian { center, scale } => {
                let mut u = optim::to_unconstrained(domain, center);
                for (ui, s) in u.iter_mut().zip(scale) {
                    let z: f64 = rng.sample(StandardNormal);
                    *ui += s * z;
                }
                optim::to_natural(domain, &u)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EbrConfig {
    pub beta: f64,
    pub restarts: usize,
    pub init: InitSampler,
    pub descent: DescentOptions,
    pub rng_seed: u64,
}

impl EbrConfig {
    /// Thirty restarts with the default descent options.
    pub fn new(beta: f64, init: InitSampler, rng_seed: u64) -> Self {
        Self {
            beta,
            restarts: 30,
            init,
            descent: DescentOptions::default(),
            rng_seed,
        }
    }

    pub fn validate(&self, domain: &[ParamDomain]) -> Result<()> {
        if !self.beta.is_finite() {
            return Err(Error::InvalidConfig("beta must be finite".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        self.descent.validate().map_err(|m| Error::InvalidConfig(m.into()))?;
        self.init.validate(domain)
    }
}

/// One gradient-descent run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RestartRecord {
    pub index: usize,
    pub initial_theta: Vec<f64>,
    pub final_theta: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RestartRecord {
    pub fn diverged(&self) -> bool {
        !self.final_loss.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub theta: Vec<f64>,
    pub ebr_loss: f64,
    /// `P(w_μ = 1 | θ*, D, β)` for every point.
    pub selection_probs: Vec<f64>,
    /// Set when the selection probabilities went through the underflow fallback.
    pub psi_underflow: bool,
    pub restarts: Vec<RestartRecord>,
}

/// `L_ER(θ; D, β)`.
pub fn ebr_loss<M: LossModel + ?Sized>(model: &M, theta: &[f64], data: &Dataset, beta: f64) -> Result<f64> {
    model.check_theta(theta)?;
    let losses = point_losses(model, theta, data)?;
    Ok(-math::mean(losses.into_iter().map(|l| softplus(beta - l))))
}

/// `∂L_ER/∂θ = (1/N) Σ_μ sigmoid(β - ℓ_μ) ∂ℓ_μ/∂θ`.
pub fn ebr_loss_grad<M: LossModel + ?Sized>(model: &M, theta: &[f64], data: &Dataset, beta: f64) -> Result<Vec<f64>> {
    model.check_theta(theta)?;
    let mut grad = vec![0.0; model.param_dim()];
    value_and_grad(model, theta, data, beta, Some(&mut grad)).map_err(|index| Error::NonFiniteLoss { index })?;
    Ok(grad)
}

// Single pass over the data. Err carries the index of the first non-finite loss.
fn value_and_grad<M: LossModel + ?Sized>(
    model: &M,
    theta: &[f64],
    data: &Dataset,
    beta: f64,
    grad: Option<&mut [f64]>,
) -> core::result::Result<f64, usize> {
    let n = data.len() as f64;
    let mut sum = 0.0;
    match grad {
        None => {
            for (i, p) in data.points().iter().enumerate() {
                let l = model.point_loss(theta, p);
                if !l.is_finite() {
                    return Err(i);
                }
                sum += softplus(beta - l);
            }
        }
        Some(grad) => {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut g = vec![0.0; grad.len()];
            for (i, p) in data.points().iter().enumerate() {
                let l = model.point_loss(theta, p);
                if !l.is_finite() {
                    return Err(i);
                }
                let (sp, weight) = softplus_and_sigmoid(beta - l);
                sum += sp;
                if weight > 0.0 {
                    model.point_loss_grad(theta, p, &mut g);
                    for (t, gi) in grad.iter_mut().zip(&g) {
                        *t += weight * gi;
                    }
                }
            }
            grad.iter_mut().for_each(|t| *t /= n);
        }
    }
    Ok(-sum / n)
}

/// `sigmoid(β - ℓ_μ)` per point: the selection probability when `Ψ ≫ 1`.
pub fn selection_probs_approx<M: LossModel + ?Sized>(
    model: &M,
    theta: &[f64],
    data: &Dataset,
    beta: f64,
) -> Result<Vec<f64>> {
    model.check_theta(theta)?;
    Ok(point_losses(model, theta, data)?
        .into_iter()
        .map(|l| sigmoid(beta - l))
        .collect())
}

/// Exact selection probabilities and the underflow flag.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProbs {
    pub probs: Vec<f64>,
    /// `log(Ψ + 1)` fell below [`PSI_UNDERFLOW`]; `Ψ` was taken from its series.
    pub psi_underflow: bool,
    /// `log(Ψ + 1) = Σ_μ softplus(β - ℓ_μ)`.
    pub log_psi_plus_one: f64,
}

/// Threshold on `log(Ψ + 1)` below which `Ψ` is treated as underflowing.
pub const PSI_UNDERFLOW: f64 = 1e-12;

/// `P(w_μ = 1 | θ, D, β) = ((Ψ + 1)/Ψ)·sigmoid(β - ℓ_μ)` with
/// `Ψ = Π_μ (1 + e^{β - ℓ_μ}) - 1`, the normalizer of the conditional of `w`.
///
/// `Ψ` is handled through `S = log(Ψ + 1)`, so `(Ψ + 1)/Ψ = 1/(1 - e^{-S})`.
/// Results are clamped to `[0, 1]`.
pub fn selection_probs_exact<M: LossModel + ?Sized>(
    model: &M,
    theta: &[f64],
    data: &Dataset,
    beta: f64,
) -> Result<SelectionProbs> {
    model.check_theta(theta)?;
    let z: Vec<f64> = point_losses(model, theta, data)?
        .into_iter()
        .map(|l| beta - l)
        .collect();
    Ok(selection_probs_from_margins(&z))
}

/// [`selection_probs_exact`] from the margins `z_μ = β - ℓ_μ`.
pub fn selection_probs_from_margins(z: &[f64]) -> SelectionProbs {
    let s: f64 = z.iter().map(|&v| softplus(v)).sum();
    if s == 0.0 {
        // Every e^{z_μ} underflowed. Only single-point selections carry mass,
        // each in proportion to e^{z_μ}.
        let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = z.iter().map(|&v| math::exp(v - zmax)).collect();
        let total: f64 = weights.iter().sum();
        return SelectionProbs {
            probs: weights.into_iter().map(|w| w / total).collect(),
            psi_underflow: true,
            log_psi_plus_one: 0.0,
        };
    }
    let (factor, psi_underflow) = if s < PSI_UNDERFLOW {
        let psi = s + 0.5 * s * s;
        ((psi + 1.0) / psi, true)
    } else {
        (-1.0 / math::exp_m1(-s), false)
    };
    SelectionProbs {
        probs: z.iter().map(|&v| (factor * sigmoid(v)).min(1.0)).collect(),
        psi_underflow,
        log_psi_plus_one: s,
    }
}

/// Runs restart `index` of `config`.
///
/// Restart `i` draws its initial point from RNG stream `i` of
/// `config.rng_seed`, so restarts can run in any order or in parallel.
pub fn fit_restart<M: LossModel + ?Sized>(
    model: &M,
    data: &Dataset,
    config: &EbrConfig,
    index: usize,
) -> RestartRecord {
    let domain = model.domain();
    let mut rng = rng::stream(config.rng_seed, index as u64);
    let initial_theta = config.init.sample(domain, &mut rng);
    let u0 = optim::to_unconstrained(domain, &initial_theta);
    let mut theta = vec![0.0; domain.len()];
    let beta = config.beta;
    let objective = |u: &[f64], grad: Option<&mut [f64]>| -> f64 {
        optim::to_natural_into(domain, u, &mut theta);
        if theta.iter().zip(domain).any(|(t, d)| !d.contains(*t)) {
            return f64::INFINITY;
        }
        match grad {
            None => value_and_grad(model, &theta, data, beta, None).unwrap_or(f64::INFINITY),
            Some(g) => match value_and_grad(model, &theta, data, beta, Some(&mut *g)) {
                Ok(v) => {
                    optim::chain_to_unconstrained(domain, &theta, g);
                    v
                }
                Err(_) => f64::INFINITY,
            },
        }
    };
    let out = optim::minimize(objective, u0, &config.descent);
    RestartRecord {
        index,
        initial_theta,
        final_theta: optim::to_natural(domain, &out.x),
        initial_loss: out.initial_value,
        final_loss: out.value,
        iterations: out.iterations,
        converged: out.converged,
    }
}

/// Picks the restart with the lowest final loss (lowest index on ties) and
/// attaches selection probabilities.
pub fn select_best<M: LossModel + ?Sized>(
    model: &M,
    data: &Dataset,
    beta: f64,
    mut restarts: Vec<RestartRecord>,
) -> Result<FitResult> {
    restarts.sort_by_key(|r| r.index);
    let best = restarts
        .iter()
        .filter(|r| !r.diverged())
        .fold(None::<&RestartRecord>, |best, r| match best {
            Some(b) if b.final_loss <= r.final_loss => Some(b),
            _ => Some(r),
        });
    let Some(best) = best else {
        return Err(Error::AllRestartsDiverged { restarts });
    };
    let theta = best.final_theta.clone();
    let ebr_loss = best.final_loss;
    let sel = selection_probs_exact(model, &theta, data, beta)?;
    Ok(FitResult {
        theta,
        ebr_loss,
        selection_probs: sel.probs,
        psi_underflow: sel.psi_underflow,
        restarts,
    })
}

/// `θ* = argmin_θ L_ER(θ; D, β)` by multi-start gradient descent.
pub fn fit<M: LossModel + ?Sized>(model: &M, data: &Dataset, config: &EbrConfig) -> Result<FitResult> {
    config.validate(model.domain())?;
    let restarts = (0..config.restarts)
        .map(|i| fit_restart(model, data, config, i))
        .collect();
    select_best(model, data, config.beta, restarts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::lms_fit;
    use crate::loss::{mean_loss, DataPoint};
    use crate::models::{ExponentialModel, LinearRegressionModel};
    use core::f64::consts::LN_2;

    /// Model whose loss is the point's input itself, so tests can dial in ℓ_μ.
    struct FixedLoss;
    impl LossModel for FixedLoss {
        fn name(&self) -> &'static str {
            "fixed"
        }
        fn domain(&self) -> &[ParamDomain] {
            &[ParamDomain::Unbounded]
        }
        fn point_loss(&self, _: &[f64], p: &DataPoint) -> f64 {
            p.x()
        }
        fn point_loss_grad(&self, _: &[f64], _: &DataPoint, g: &mut [f64]) {
            g[0] = 0.0;
        }
    }

    fn losses(ls: &[f64]) -> Dataset {
        Dataset::from_scalars(ls).unwrap()
    }

    #[test]
    fn loss_at_zero_margin_is_minus_ln2() {
        assert!((ebr_loss(&FixedLoss, &[0.0], &losses(&[0.0, 0.0, 0.0]), 0.0).unwrap() + LN_2).abs() < 1e-15);
        for beta in [-300.0, -1.0, 2.5, 650.0] {
            let v = ebr_loss(&FixedLoss, &[0.0], &losses(&[beta]), beta).unwrap();
            assert!((v + LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_two_points_beta_one() {
        // ℓ = (1, 4); -(softplus(0) + softplus(-3))/2. softplus(-3) = ln(1 + e^-3)
        // = 0.0485873515737420588 (50-digit evaluation).
        let d = Dataset::from_pairs(&[(1.0, 1.0), (2.0, 2.0)]).unwrap();
        let v = ebr_loss(&LinearRegressionModel, &[0.0, 0.0], &d, 1.0).unwrap();
        let expected = -(core::f64::consts::LN_2 + 0.048_587_351_573_742_06) / 2.0;
        assert!((v - expected).abs() < 1e-15, "{v} vs {expected}");
    }

    #[test]
    fn loss_is_finite_over_extreme_range() {
        for beta in [-700.0, -10.0, 0.0, 10.0, 700.0] {
            let v = ebr_loss(&FixedLoss, &[0.0], &losses(&[0.0, 350.0, 700.0]), beta).unwrap();
            assert!(v.is_finite());
        }
    }

    #[test]
    fn loss_reports_non_finite_index() {
        struct Bad;
        impl LossModel for Bad {
            fn name(&self) -> &'static str {
                "bad"
            }
            fn domain(&self) -> &[ParamDomain] {
                &[ParamDomain::Unbounded]
            }
            fn point_loss(&self, _: &[f64], p: &DataPoint) -> f64 {
                if p.x() < 0.0 {
                    f64::NAN
                } else {
                    0.0
                }
            }
            fn point_loss_grad(&self, _: &[f64], _: &DataPoint, g: &mut [f64]) {
                g[0] = 0.0;
            }
        }
        let d = losses(&[1.0, 1.0, -1.0]);
        assert!(matches!(
            ebr_loss(&Bad, &[0.0], &d, 1.0),
            Err(Error::NonFiniteLoss { index: 2 })
        ));
        assert!(matches!(
            ebr_loss_grad(&Bad, &[0.0], &d, 1.0),
            Err(Error::NonFiniteLoss { index: 2 })
        ));
    }

    #[test]
    fn grad_vanishes_for_flat_losses_and_very_negative_beta() {
        let g = ebr_loss_grad(&FixedLoss, &[0.0], &losses(&[1.0, 2.0]), 3.0).unwrap();
        assert_eq!(g, vec![0.0]);
        let d = Dataset::from_pairs(&[(1.0, 5.0), (-2.0, 0.5)]).unwrap();
        let g = ebr_loss_grad(&LinearRegressionModel, &[0.3, -0.2], &d, -800.0).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-300));
    }

    #[test]
    fn exact_probs_single_point_at_threshold() {
        let p = selection_probs_exact(&FixedLoss, &[0.0], &losses(&[2.0]), 2.0).unwrap();
        assert!((p.probs[0] - 1.0).abs() < 1e-15);
        assert!(!p.psi_underflow);
    }

    #[test]
    fn exact_probs_two_equal_points() {
        // Admissible w: (1,0), (0,1), (1,1), all with weight 1; each w_μ is 1 in two of three.
        let p = selection_probs_exact(&FixedLoss, &[0.0], &losses(&[1.5, 1.5]), 1.5).unwrap();
        for v in p.probs {
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_approaches_sigmoid_for_large_psi() {
        let ls: Vec<f64> = (0..200).map(|i| (i % 7) as f64 * 0.1).collect();
        let d = losses(&ls);
        let exact = selection_probs_exact(&FixedLoss, &[0.0], &d, 8.0).unwrap();
        let approx = selection_probs_approx(&FixedLoss, &[0.0], &d, 8.0).unwrap();
        for (e, a) in exact.probs.iter().zip(&approx) {
            assert!((e - a).abs() < 1e-12);
        }
    }

    #[test]
    fn approx_probs_values() {
        let p = selection_probs_approx(&FixedLoss, &[0.0], &losses(&[3.0, 3.0 - libm::log(3.0)]), 3.0).unwrap();
        assert_eq!(p[0], 0.5);
        assert!((p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn exact_minus_approx_is_approx_over_psi() {
        let d = losses(&[0.2, 1.7, 3.1, 5.0]);
        let beta = 1.0;
        let exact = selection_probs_exact(&FixedLoss, &[0.0], &d, beta).unwrap();
        let approx = selection_probs_approx(&FixedLoss, &[0.0], &d, beta).unwrap();
        let psi: f64 = d
            .points()
            .iter()
            .map(|p| 1.0 + libm::exp(beta - p.x()))
            .product::<f64>()
            - 1.0;
        for (e, a) in exact.probs.iter().zip(&approx) {
            assert!(e >= a);
            assert!(((e - a) - a / psi).abs() < 1e-14);
        }
    }

    #[test]
    fn psi_underflow_falls_back_and_flags() {
        // e^{-40} per point: S ≈ 8.5e-18 < 1e-12.
        let p = selection_probs_exact(&FixedLoss, &[0.0], &losses(&[40.0, 41.0]), 0.0).unwrap();
        assert!(p.psi_underflow);
        let e = libm::exp(-1.0);
        assert!((p.probs[0] - 1.0 / (1.0 + e)).abs() < 1e-9);
        assert!((p.probs[1] - e / (1.0 + e)).abs() < 1e-9);

        // Complete underflow of every softplus.
        let p = selection_probs_exact(&FixedLoss, &[0.0], &losses(&[900.0, 900.0]), 0.0).unwrap();
        assert!(p.psi_underflow);
        assert_eq!(p.probs, vec![0.5, 0.5]);
    }

    fn clean_line() -> Dataset {
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let x = -2.0 + 0.1 * i as f64;
                let noise = 0.05 * libm::sin(1.7 * i as f64);
                (x, 0.5 * x - 1.0 + noise)
            })
            .collect();
        Dataset::from_pairs(&pts).unwrap()
    }

    fn linreg_config(beta: f64) -> EbrConfig {
        EbrConfig {
            restarts: 5,
            ..EbrConfig::new(
                beta,
                InitSampler::UniformBox {
                    lower: vec![-3.0, -3.0],
                    upper: vec![3.0, 3.0],
                },
                11,
            )
        }
    }

    #[test]
    fn large_beta_recovers_least_squares() {
        let d = clean_line();
        let fit = fit(&LinearRegressionModel, &d, &linreg_config(50.0)).unwrap();
        let (a, b) = lms_fit(&d).unwrap();
        assert!((fit.theta[0] - a).abs() < 1e-6 && (fit.theta[1] - b).abs() < 1e-6);
        assert!((fit.ebr_loss + 50.0 - mean_loss(&LinearRegressionModel, &fit.theta, &d).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fit_is_deterministic_and_best_is_minimum() {
        let d = clean_line();
        let cfg = linreg_config(2.0);
        let a = fit(&LinearRegressionModel, &d, &cfg).unwrap();
        let b = fit(&LinearRegressionModel, &d, &cfg).unwrap();
        assert_eq!(a, b);
        let min = a.restarts.iter().map(|r| r.final_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(a.ebr_loss, min);
        for r in &a.restarts {
            assert!(r.final_loss <= r.initial_loss);
        }
        assert!(a.selection_probs.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn restart_order_does_not_matter() {
        let d = clean_line();
        let cfg = linreg_config(2.0);
        let reversed: Vec<_> = (0..cfg.restarts)
            .rev()
            .map(|i| fit_restart(&LinearRegressionModel, &d, &cfg, i))
            .collect();
        let a = select_best(&LinearRegressionModel, &d, cfg.beta, reversed).unwrap();
        assert_eq!(a, fit(&LinearRegressionModel, &d, &cfg).unwrap());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let rec = |index, loss| RestartRecord {
            index,
            initial_theta: vec![index as f64],
            final_theta: vec![index as f64],
            initial_loss: loss,
            final_loss: loss,
            iterations: 0,
            converged: true,
        };
        let d = losses(&[0.0]);
        let r = select_best(&FixedLoss, &d, 0.0, vec![rec(2, -1.0), rec(1, -1.0), rec(0, f64::NAN)]).unwrap();
        assert_eq!(r.theta, vec![1.0]);
    }

    #[test]
    fn all_diverged_is_an_error() {
        let rec = RestartRecord {
            index: 0,
            initial_theta: vec![0.0],
            final_theta: vec![0.0],
            initial_loss: f64::NAN,
            final_loss: f64::NAN,
            iterations: 0,
            converged: false,
        };
        match select_best(&FixedLoss, &losses(&[0.0]), 0.0, vec![rec]) {
            Err(Error::AllRestartsDiverged { restarts }) => assert_eq!(restarts.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let d = clean_line();
        let mut cfg = linreg_config(1.0);
        cfg.restarts = 0;
        assert!(matches!(
            fit(&LinearRegressionModel, &d, &cfg),
            Err(Error::InvalidConfig(_))
        ));
        let cfg = EbrConfig::new(
            1.0,
            InitSampler::UniformBox {
                lower: vec![-1.0],
                upper: vec![1.0],
            },
            0,
        );
        assert!(fit(&ExponentialModel, &losses(&[1.0]), &cfg).is_err());
    }

    #[test]
    fn positive_coordinates_stay_positive() {
        let d = losses(&[0.1, 0.3, 0.2, 6.5, 0.05]);
        let cfg = EbrConfig {
            restarts: 4,
            ..EbrConfig::new(
                3.0,
                InitSampler::UniformBox {
                    lower: vec![0.05],
                    upper: vec![5.0],
                },
                5,
            )
        };
        let r = fit(&ExponentialModel, &d, &cfg).unwrap();
        assert!(r.theta[0] > 0.0);
        assert!(r.restarts.iter().all(|x| x.final_theta[0] > 0.0));
    }

    #[test]
    fn gaussian_init_sampler_is_log_normal_for_positive_coords() {
        let init = InitSampler::Gaussian {
            center: vec![0.0, 0.2],
            scale: vec![1.0, 0.5],
        };
        let dom = [ParamDomain::Unbounded, ParamDomain::StrictlyPositive];
        let mut rng = rng::stream(3, 0);
        for _ in 0..100 {
            let t = init.sample(&dom, &mut rng);
            assert!(t[1] > 0.0);
        }
    }
}
