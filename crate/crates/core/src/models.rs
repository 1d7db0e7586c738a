//! Concrete loss models: squared-error linear regression and the negative
//! log-likelihoods of the univariate Gaussian and exponential distributions.

use alloc::vec;
use alloc::vec::Vec;

use crate::baselines;
use crate::loss::{DataPoint, Dataset, LossModel, ParamDomain};
use crate::math::{self, softplus};
use crate::quad::adaptive_simpson;
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ℓ = (y - a·x - b)²` with `θ = (a, b)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinearRegressionModel;

impl LossModel for LinearRegressionModel {
    fn name(&self) -> &'static str {
        "linreg"
    }

    fn domain(&self) -> &[ParamDomain] {
        &[ParamDomain::Unbounded, ParamDomain::Unbounded]
    }

    #[inline]
    fn point_loss(&self, theta: &[f64], p: &DataPoint) -> f64 {
        let r = p.y() - theta[0] * p.x() - theta[1];
        r * r
    }

    #[inline]
    fn point_loss_grad(&self, theta: &[f64], p: &DataPoint, grad: &mut [f64]) {
        let x = p.x();
        let r = p.y() - theta[0] * x - theta[1];
        grad[0] = -2.0 * r * x;
        grad[1] = -2.0 * r;
    }
}

/// Negative log-density of `N(m, σ²)` with `θ = (m, σ)`, `σ > 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GaussianModel;

impl LossModel for GaussianModel {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn domain(&self) -> &[ParamDomain] {
        &[ParamDomain::Unbounded, ParamDomain::StrictlyPositive]
    }

    #[inline]
    fn point_loss(&self, theta: &[f64], p: &DataPoint) -> f64 {
        let (m, s) = (theta[0], theta[1]);
        let z = (p.x() - m) / s;
        0.5 * LN_2PI + math::ln(s) + 0.5 * z * z
    }

    #[inline]
    fn point_loss_grad(&self, theta: &[f64], p: &DataPoint, grad: &mut [f64]) {
        let (m, s) = (theta[0], theta[1]);
        let d = p.x() - m;
        let s2 = s * s;
        grad[0] = -d / s2;
        grad[1] = 1.0 / s - d * d / (s2 * s);
    }
}

/// Negative log-density of the exponential distribution, `ℓ = -ln λ + λ·x`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExponentialModel;

impl LossModel for ExponentialModel {
    fn name(&self) -> &'static str {
        "exponential"
    }

    fn domain(&self) -> &[ParamDomain] {
        &[ParamDomain::StrictlyPositive]
    }

    #[inline]
    fn point_loss(&self, theta: &[f64], p: &DataPoint) -> f64 {
        -math::ln(theta[0]) + theta[0] * p.x()
    }

    #[inline]
    fn point_loss_grad(&self, theta: &[f64], p: &DataPoint, grad: &mut [f64]) {
        grad[0] = -1.0 / theta[0] + p.x();
    }
}

/// Models whose loss has a closed-form minimizer over any index subset.
pub trait ClosedFormFit: LossModel {
    fn fit_subset(&self, data: &Dataset, subset: &[usize]) -> Result<Vec<f64>>;
}

impl ClosedFormFit for LinearRegressionModel {
    fn fit_subset(&self, data: &Dataset, subset: &[usize]) -> Result<Vec<f64>> {
        let pts = data.points();
        let (a, b) = baselines::ols(subset.iter().map(|&i| (pts[i].x(), pts[i].y())))?;
        Ok(vec![a, b])
    }
}

impl ClosedFormFit for GaussianModel {
    fn fit_subset(&self, data: &Dataset, subset: &[usize]) -> Result<Vec<f64>> {
        let pts = data.points();
        let (m, s) = baselines::mean_and_std(subset.iter().map(|&i| pts[i].x()))?;
        Ok(vec![m, s])
    }
}

impl ClosedFormFit for ExponentialModel {
    fn fit_subset(&self, data: &Dataset, subset: &[usize]) -> Result<Vec<f64>> {
        let pts = data.points();
        let lambda = baselines::inverse_mean(subset.iter().map(|&i| pts[i].x()))?;
        Ok(vec![lambda])
    }
}

/// Kullback-Leibler divergence `KL(N(m₁,σ₁²) ‖ N(m₂,σ₂²))`.
pub fn kld_gaussian(p: (f64, f64), q: (f64, f64)) -> Result<f64> {
    let ((m1, s1), (m2, s2)) = (p, q);
    for s in [s1, s2] {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain {
                value: s,
                domain: "positive reals",
            });
        }
    }
    let d = m1 - m2;
    Ok(math::ln(s2 / s1) + (s1 * s1 + d * d) / (2.0 * s2 * s2) - 0.5)
}

/// Inlier/outlier mixture `r·Exp(rate) + (1-r)·U[lo, hi]` that generates the
/// exponential benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentialMixture {
    pub inlier_ratio: f64,
    pub rate: f64,
    pub outlier_lo: f64,
    pub outlier_hi: f64,
}

impl ExponentialMixture {
    /// The benchmark mixture: 200 inliers from Exp(2), 40 outliers from U[6, 7].
    pub const BENCHMARK: Self = Self {
        inlier_ratio: 200.0 / 240.0,
        rate: 2.0,
        outlier_lo: 6.0,
        outlier_hi: 7.0,
    };

    pub fn with_ratio(inlier_ratio: f64) -> Self {
        Self {
            inlier_ratio,
            ..Self::BENCHMARK
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let inlier = self.inlier_ratio * self.rate * math::exp(-self.rate * x);
        let outlier = if (self.outlier_lo..=self.outlier_hi).contains(&x) {
            (1.0 - self.inlier_ratio) / (self.outlier_hi - self.outlier_lo)
        } else {
            0.0
        };
        inlier + outlier
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.inlier_ratio) {
            return Err(Error::Domain {
                value: self.inlier_ratio,
                domain: "[0, 1]",
            });
        }
        if !(self.rate > 0.0) || !(self.outlier_lo >= 0.0 && self.outlier_hi > self.outlier_lo) {
            return Err(Error::InvalidInput("mixture needs rate > 0 and 0 <= lo < hi".into()));
        }
        Ok(())
    }
}

/// Absolute tolerance of [`population_ebr_loss_exponential`].
pub const POPULATION_QUAD_TOL: f64 = 1e-10;

/// Where the inlier tail integration stops; the remainder is bounded in closed form.
const TAIL_CUTOFF: f64 = 60.0;

/// Large-sample limit of the EB-RANSAC loss of the exponential model under
/// the benchmark mixture, shifted by `softplus(β)`:
///
/// ```text
/// L̂(λ; β) = -∫₀^∞ q(x) softplus(β - ℓ(λ; x)) dx + softplus(β)
/// ```
///
/// The shift makes landscapes at different `β` comparable.
pub fn population_ebr_loss_exponential(lambda: f64, beta: f64, inlier_ratio: f64) -> Result<f64> {
    population_ebr_loss(lambda, beta, &ExponentialMixture::with_ratio(inlier_ratio))
}

/// [`population_ebr_loss_exponential`] for an arbitrary mixture.
pub fn population_ebr_loss(lambda: f64, beta: f64, mix: &ExponentialMixture) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain {
            value: lambda,
            domain: "positive reals",
        });
    }
    mix.validate()?;
    let shift = beta + math::ln(lambda);
    let selected = |x: f64| softplus(shift - lambda * x);
    let inlier = |x: f64| mix.inlier_ratio * mix.rate * math::exp(-mix.rate * x) * selected(x);
    let outlier_density = (1.0 - mix.inlier_ratio) / (mix.outlier_hi - mix.outlier_lo);

    // Panels break at the uniform component's edges.
    let (lo, hi) = (mix.outlier_lo, mix.outlier_hi);
    let tol = POPULATION_QUAD_TOL / 4.0;
    let mut total = 0.0;
    let mut err = 0.0;
    for (a, b) in [(0.0, lo), (lo, hi), (hi, TAIL_CUTOFF.max(hi))] {
        if b > a {
            let q = adaptive_simpson(inlier, a, b, tol)?;
            total += q.value;
            err += q.error;
        }
    }
    let uni = adaptive_simpson(|x| outlier_density * selected(x), lo, hi, tol)?;
    total += uni.value;
    err += uni.error;

    // softplus is decreasing in x, so the tail beyond the cutoff is at most
    // r·e^{-rate·c}·softplus(shift - λc).
    let c = TAIL_CUTOFF.max(hi);
    let remainder = mix.inlier_ratio * math::exp(-mix.rate * c) * selected(c);
    if err + remainder > POPULATION_QUAD_TOL {
        return Err(Error::Quadrature {
            estimate: -total + softplus(beta),
            error_bound: err + remainder,
        });
    }
    Ok(-total + softplus(beta))
}
