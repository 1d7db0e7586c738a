//! The joint selection model behind EB-RANSAC.
//!
//! `P(θ, w | D, β) ∝ exp(-Σ_μ w_μ ℓ(θ; d_μ) + β Σ_μ w_μ)` over binary
//! selection vectors `w ≠ 0`. Its conditionals recover the pieces of RANSAC:
//! maximizing over `θ` for fixed `w` trains on the selected points, and the
//! maximizer over `w` for fixed `θ` is the consensus set `{μ : ℓ_μ < β}`.
//! Alternating the two maximizations is LO-RANSAC without a consensus-size
//! test.
//!
//! The deterministic alternation is the zero-temperature limit of Gibbs
//! sampling on `P^{1/T}`; only the two endpoints (exact sampling of `w` and
//! the `T → 0` alternation) are implemented here.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;

use crate::baselines::SubsetSolver;
use crate::loss::{point_losses, Dataset, LossModel};
use crate::math::sigmoid;
use crate::{Error, Result};

/// Binary selection over the data points, never all zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SelectionVector(Vec<bool>);

impl SelectionVector {
    pub fn new(w: Vec<bool>) -> Result<Self> {
        if w.iter().any(|&b| b) {
            Ok(Self(w))
        } else {
            Err(Error::InvalidInput(
                "selection vector must select at least one point".into(),
            ))
        }
    }

    /// Selection of exactly the given indices.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut w = alloc::vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidInput(alloc::format!(
                    "index {i} out of range for {n} points"
                )));
            }
            w[i] = true;
        }
        Self::new(w)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }
}

/// `Σ_μ w_μ (β - ℓ_μ)`, the log of the unnormalized joint density.
pub fn joint_log_density_unnorm<M: LossModel + ?Sized>(
    model: &M,
    theta: &[f64],
    w: &SelectionVector,
    data: &Dataset,
    beta: f64,
) -> Result<f64> {
    check_len(w, data)?;
    model.check_theta(theta)?;
    let pts = data.points();
    let mut total = 0.0;
    for i in w.indices() {
        let l = model.point_loss(theta, &pts[i]);
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss { index: i });
        }
        total += beta - l;
    }
    Ok(total)
}

fn check_len(w: &SelectionVector, data: &Dataset) -> Result<()> {
    if w.len() != data.len() {
        return Err(Error::InvalidInput(alloc::format!(
            "selection vector has {} entries for {} points",
            w.len(),
            data.len()
        )));
    }
    Ok(())
}

/// Maximizer of the conditional of `w`: `w_μ = 1` iff `β > ℓ_μ`.
///
/// Fails with [`Error::EmptyConsensus`] when no point qualifies.
pub fn consensus_mask<M: LossModel + ?Sized>(
    model: &M,
    theta: &[f64],
    data: &Dataset,
    beta: f64,
) -> Result<SelectionVector> {
    model.check_theta(theta)?;
    let w = point_losses(model, theta, data)?
        .into_iter()
        .map(|l| beta > l)
        .collect();
    SelectionVector::new(w).map_err(|_| Error::EmptyConsensus)
}

/// [`consensus_mask`], falling back to the single lowest-loss point when the
/// consensus set is empty. The flag reports whether the fallback was used.
pub fn consensus_mask_or_fallback<M: LossModel + ?Sized>(
    model: &M,
    theta: &[f64],
    data: &Dataset,
    beta: f64,
) -> Result<(SelectionVector, bool)> {
    match consensus_mask(model, theta, data, beta) {
        Err(Error::EmptyConsensus) => {
            let losses = point_losses(model, theta, data)?;
            let best = losses
                .iter()
                .enumerate()
                .fold(0, |b, (i, l)| if *l < losses[b] { i } else { b });
            Ok((SelectionVector::from_indices(data.len(), &[best])?, true))
        }
        other => other.map(|w| (w, false)),
    }
}

/// Default proposal budget of [`sample_w`].
pub const REJECTION_BUDGET: usize = 10_000;

/// Exact sampler for the conditional of `w` given `θ`.
///
/// That conditional is the product of independent `Bernoulli(sigmoid(β - ℓ_μ))`
/// restricted to `w ≠ 0`, so proposing from the product and rejecting the
/// all-zero draw is exact. The acceptance probability is `Ψ/(Ψ + 1)`.
#[derive(Debug, Clone)]
pub struct SelectionSampler {
    probs: Vec<f64>,
}

impl SelectionSampler {
    pub fn new<M: LossModel + ?Sized>(model: &M, theta: &[f64], data: &Dataset, beta: f64) -> Result<Self> {
        model.check_theta(theta)?;
        Ok(Self::from_margins(
            &point_losses(model, theta, data)?
                .into_iter()
                .map(|l| beta - l)
                .collect::<Vec<_>>(),
        ))
    }

    /// From margins `z_μ = β - ℓ_μ`; `+∞` selects a point with probability 1.
    pub fn from_margins(z: &[f64]) -> Self {
        Self {
            probs: z.iter().map(|&v| sigmoid(v)).collect(),
        }
    }

    pub fn inclusion_probs(&self) -> &[f64] {
        &self.probs
    }

    /// One proposal; `None` if it was the excluded all-zero vector.
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<SelectionVector> {
        let w: Vec<bool> = self.probs.iter().map(|&p| rng.random::<f64>() < p).collect();
        SelectionVector::new(w).ok()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, budget: usize) -> Result<SelectionVector> {
        for _ in 0..budget {
            if let Some(w) = self.propose(rng) {
                return Ok(w);
            }
        }
        Err(Error::RejectionBudgetExhausted { draws: budget })
    }
}

/// Draws `w ~ P(w | θ, D, β)` exactly.
pub fn sample_w<M: LossModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    theta: &[f64],
    data: &Dataset,
    beta: f64,
    rng: &mut R,
) -> Result<SelectionVector> {
    SelectionSampler::new(model, theta, data, beta)?.sample(rng, REJECTION_BUDGET)
}

/// One round of the alternation: `θ_t` fitted on `w_t`, and the consensus
/// mask `w_{t+1}` of `θ_t`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainRound {
    pub round: usize,
    pub theta: Vec<f64>,
    pub w: SelectionVector,
    /// Log density at `(θ_t, w_t)`.
    pub log_density: f64,
    /// Log density at `(θ_t, w_{t+1})`; absent if the mask step failed.
    pub log_density_next_mask: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainTrace {
    pub rounds: Vec<ChainRound>,
    pub converged: bool,
}

impl ChainTrace {
    pub fn iterations(&self) -> usize {
        self.rounds.len()
    }

    pub fn final_theta(&self) -> Option<&[f64]> {
        self.rounds.last().map(|r| r.theta.as_slice())
    }

    /// Checks the coordinate-ascent chain
    /// `f(θ_t, w_t) ≤ f(θ_t, w_{t+1}) ≤ f(θ_{t+1}, w_{t+1})` with a relative slack.
    pub fn is_monotone(&self, rel_slack: f64) -> bool {
        let le = |a: f64, b: f64| a <= b + rel_slack * a.abs().max(b.abs()).max(1.0);
        self.rounds.iter().enumerate().all(|(t, r)| {
            let Some(mid) = r.log_density_next_mask else {
                return true;
            };
            le(r.log_density, mid) && self.rounds.get(t + 1).is_none_or(|n| le(mid, n.log_density))
        })
    }
}

/// Deterministic alternating maximization of the joint density from `w0`.
///
/// Stops when the consensus mask reproduces the current selection or after
/// `max_rounds` rounds.
pub fn alternate_maximize<M, S>(
    model: &M,
    data: &Dataset,
    beta: f64,
    w0: SelectionVector,
    solver: &S,
    max_rounds: usize,
) -> Result<ChainTrace>
where
    M: LossModel + ?Sized,
    S: SubsetSolver<M> + ?Sized,
{
    check_len(&w0, data)?;
    let mut trace = ChainTrace::default();
    let fail = |source: Error, trace: ChainTrace| Error::ChainFailed {
        source: Box::new(source),
        trace: Box::new(trace),
    };
    let mut w = w0;
    for round in 0..max_rounds {
        let theta = match solver.solve(model, data, &w.indices()) {
            Ok(t) => t,
            Err(e) => return Err(fail(e, trace)),
        };
        let log_density = match joint_log_density_unnorm(model, &theta, &w, data, beta) {
            Ok(v) => v,
            Err(e) => return Err(fail(e, trace)),
        };
        let next = consensus_mask(model, &theta, data, beta);
        let mut r = ChainRound {
            round,
            theta,
            w: w.clone(),
            log_density,
            log_density_next_mask: None,
        };
        let next = match next {
            Ok(n) => n,
            Err(e) => {
                trace.rounds.push(r);
                return Err(fail(e, trace));
            }
        };
        r.log_density_next_mask = Some(joint_log_density_unnorm(model, &r.theta, &next, data, beta)?);
        trace.rounds.push(r);
        if next == w {
            trace.converged = true;
            break;
        }
        w = next;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::ClosedForm;
    use crate::ebr::{ebr_loss, selection_probs_exact};
    use crate::loss::{mean_loss, DataPoint, ParamDomain};
    use crate::models::LinearRegressionModel;
    use crate::rng;

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

    #[test]
    fn zero_selection_rejected() {
        assert!(SelectionVector::new(alloc::vec![false, false]).is_err());
        assert!(SelectionVector::from_indices(3, &[5]).is_err());
    }

    #[test]
    fn log_density_single_point_at_threshold() {
        let d = Dataset::from_scalars(&[2.0, 7.0]).unwrap();
        let w = SelectionVector::from_indices(2, &[0]).unwrap();
        assert_eq!(joint_log_density_unnorm(&FixedLoss, &[0.0], &w, &d, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn log_density_all_selected() {
        let d = Dataset::from_pairs(&[(0.0, 1.0), (1.0, 0.5), (2.0, 4.0)]).unwrap();
        let theta = [1.0, 0.5];
        let w = SelectionVector::new(alloc::vec![true; 3]).unwrap();
        let v = joint_log_density_unnorm(&LinearRegressionModel, &theta, &w, &d, 1.5).unwrap();
        let expected = -3.0 * mean_loss(&LinearRegressionModel, &theta, &d).unwrap() + 3.0 * 1.5;
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn two_point_enumeration_matches_conditional() {
        // Normalizing exp(log density) over the three admissible w reproduces the
        // exact selection probabilities.
        let d = Dataset::from_scalars(&[0.4, 1.9]).unwrap();
        let beta = 1.0;
        let states = [[true, false], [false, true], [true, true]];
        let weights: Vec<f64> = states
            .iter()
            .map(|s| {
                let w = SelectionVector::new(s.to_vec()).unwrap();
                libm::exp(joint_log_density_unnorm(&FixedLoss, &[0.0], &w, &d, beta).unwrap())
            })
            .collect();
        let z: f64 = weights.iter().sum();
        let p0 = (weights[0] + weights[2]) / z;
        let p1 = (weights[1] + weights[2]) / z;
        let exact = selection_probs_exact(&FixedLoss, &[0.0], &d, beta).unwrap().probs;
        assert!((p0 - exact[0]).abs() < 1e-14);
        assert!((p1 - exact[1]).abs() < 1e-14);
        // Normalizer is exp(-N L_ER) - 1.
        let psi = libm::expm1(-2.0 * ebr_loss(&FixedLoss, &[0.0], &d, beta).unwrap());
        assert!((z - psi).abs() < 1e-14 * psi);
    }

    #[test]
    fn consensus_threshold_rule() {
        let d = Dataset::from_scalars(&[0.5, 1.0, 3.0]).unwrap();
        let w = consensus_mask(&FixedLoss, &[0.0], &d, 5.0).unwrap();
        assert_eq!(w.as_slice(), &[true, true, true]);
        let d = Dataset::from_scalars(&[1.0, 3.0]).unwrap();
        let w = consensus_mask(&FixedLoss, &[0.0], &d, 2.0).unwrap();
        assert_eq!(w.as_slice(), &[true, false]);
        // β equal to the loss is not strictly greater.
        let w = consensus_mask(&FixedLoss, &[0.0], &d, 3.0).unwrap();
        assert_eq!(w.as_slice(), &[true, false]);
    }

    #[test]
    fn empty_consensus_and_fallback() {
        let d = Dataset::from_scalars(&[4.0, 3.0, 5.0]).unwrap();
        assert!(matches!(
            consensus_mask(&FixedLoss, &[0.0], &d, 1.0),
            Err(Error::EmptyConsensus)
        ));
        let (w, flagged) = consensus_mask_or_fallback(&FixedLoss, &[0.0], &d, 1.0).unwrap();
        assert!(flagged);
        assert_eq!(w.indices(), alloc::vec![1]);
    }

    #[test]
    fn certain_point_always_selected() {
        let s = SelectionSampler::from_margins(&[f64::INFINITY, -2.0, 0.0]);
        let mut rng = rng::stream(9, 0);
        for _ in 0..1000 {
            let w = s.propose(&mut rng).unwrap();
            assert!(w.as_slice()[0]);
        }
    }

    #[test]
    fn sampler_budget_exhaustion() {
        let s = SelectionSampler::from_margins(&[-800.0, -800.0]);
        let mut rng = rng::stream(1, 0);
        assert!(matches!(
            s.sample(&mut rng, 50),
            Err(Error::RejectionBudgetExhausted { draws: 50 })
        ));
    }

    #[test]
    fn sampled_means_match_exact_probs() {
        let d = Dataset::from_scalars(&[0.1, 1.3, 2.2, 4.0]).unwrap();
        let beta = 1.0;
        let exact = selection_probs_exact(&FixedLoss, &[0.0], &d, beta).unwrap().probs;
        let mut rng = rng::stream(2024, 0);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let w = sample_w(&FixedLoss, &[0.0], &d, beta, &mut rng).unwrap();
            for (c, &b) in counts.iter_mut().zip(w.as_slice()) {
                *c += b as usize;
            }
        }
        for (c, p) in counts.iter().zip(&exact) {
            let freq = *c as f64 / n as f64;
            let sd = libm::sqrt(p * (1.0 - p) / n as f64);
            assert!((freq - p).abs() < 3.0 * sd + 1e-12, "{freq} vs {p}");
        }
    }

    #[test]
    fn noiseless_line_converges_quickly() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 - 1.0)).collect();
        let d = Dataset::from_pairs(&pts).unwrap();
        let w0 = SelectionVector::from_indices(10, &[2, 7]).unwrap();
        let trace = alternate_maximize(&LinearRegressionModel, &d, 1.0, w0, &ClosedForm, 20).unwrap();
        assert!(trace.converged);
        assert!(trace.iterations() <= 2);
        let last = trace.rounds.last().unwrap();
        assert_eq!(last.w.count(), 10);
        assert!((last.theta[0] - 2.0).abs() < 1e-12 && (last.theta[1] + 1.0).abs() < 1e-12);
        assert!(trace.is_monotone(1e-12));
    }

    #[test]
    fn chain_failure_carries_trace() {
        // β below every loss: the first mask step is empty.
        let d = Dataset::from_pairs(&[(0.0, 0.0), (1.0, 1.0), (2.0, 5.0)]).unwrap();
        let w0 = SelectionVector::from_indices(3, &[0, 2]).unwrap();
        match alternate_maximize(&LinearRegressionModel, &d, -1.0, w0, &ClosedForm, 5) {
            Err(Error::ChainFailed { source, trace }) => {
                assert!(matches!(*source, Error::EmptyConsensus));
                assert_eq!(trace.rounds.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
