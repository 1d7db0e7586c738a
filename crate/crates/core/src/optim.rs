//! Gradient descent with Armijo backtracking, in an unconstrained
//! parameterization.
//!
//! Strictly positive coordinates are optimized as `u = ln θ`; the chain rule
//! gives `∂f/∂u = θ · ∂f/∂θ`.

use alloc::vec;
use alloc::vec::Vec;

use crate::loss::ParamDomain;
use crate::math;

/// Backtracking line-search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRule {
    pub initial: f64,
    pub shrink: f64,
    pub armijo: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            initial: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DescentOptions {
    pub max_iters: usize,
    /// Stop once the infinity norm of the (unconstrained) gradient drops below this.
    pub grad_tol: f64,
    pub step: StepRule,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            grad_tol: 1e-8,
            step: StepRule::default(),
        }
    }
}

impl DescentOptions {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1");
        }
        if !(self.grad_tol > 0.0) {
            return Err("grad_tol must be positive");
        }
        let s = &self.step;
        if !(s.initial > 0.0) || !(s.shrink > 0.0 && s.shrink < 1.0) || !(s.armijo > 0.0 && s.armijo < 1.0) {
            return Err("step rule needs initial > 0, shrink in (0,1), armijo in (0,1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

// Below this the step no longer moves any coordinate.
const MIN_STEP: f64 = 1e-20;
// Relative size of loss changes treated as rounding error.
const ROUNDOFF: f64 = 1e-12;

/// Minimizes `f` from `x0`.
///
/// `f(x, grad)` returns the objective and, when `grad` is `Some`, writes the
/// gradient. A non-finite return marks the point as infeasible: the line
/// search shrinks away from it, and a non-finite start is returned as is.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &DescentOptions) -> DescentOutcome
where
    F: FnMut(&[f64], Option<&mut [f64]>) -> f64,
{
    let n = x0.len();
    let x0_copy = x0.clone();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut value = f(&x, Some(&mut g));
    let initial_value = value;
    if !value.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return DescentOutcome {
            x,
            value,
            initial_value,
            iterations: 0,
            converged: false,
        };
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        if math::max_abs(&g) < opts.grad_tol {
            converged = true;
            break;
        }
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let g_norm = math::max_abs(&g);
        let noise = ROUNDOFF * value.abs().max(1.0);
        let mut step = opts.step.initial;
        let accepted = loop {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&g) {
                *t = xi - step * gi;
            }
            let v = f(&trial, None);
            if step * g2 >= noise {
                if v.is_finite() && v <= value - opts.step.armijo * step * g2 {
                    break Some((v, false));
                }
            } else if v.is_finite() && v <= value + noise {
                // The promised decrease is below the rounding error of
                // `value`, so the sufficient-decrease test is blind here.
                // Take the step if it shrinks the gradient instead.
                let vt = f(&trial, Some(&mut g_trial));
                if vt.is_finite() && math::max_abs(&g_trial) < g_norm {
                    break Some((vt, true));
                }
            }
            step *= opts.step.shrink;
            if step < MIN_STEP {
                break None;
            }
        };
        iterations += 1;
        let Some((_, have_grad)) = accepted else {
            break;
        };
        core::mem::swap(&mut x, &mut trial);
        if have_grad {
            core::mem::swap(&mut g, &mut g_trial);
            value = f(&x, None);
        } else {
            value = f(&x, Some(&mut g));
        }
        if !value.is_finite() || g.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    if value > initial_value {
        // Only reachable by steps inside the rounding error of a start that
        // was already at a minimum.
        let mut g0 = vec![0.0; n];
        let v0 = f(&x0_copy, Some(&mut g0));
        return DescentOutcome {
            converged: math::max_abs(&g0) < opts.grad_tol,
            x: x0_copy,
            value: v0,
            initial_value,
            iterations,
        };
    }
    if !converged && iterations >= opts.max_iters {
        converged = math::max_abs(&g) < opts.grad_tol;
    }
    DescentOutcome {
        x,
        value,
        initial_value,
        iterations,
        converged,
    }
}

/// Maps natural parameters to the unconstrained space.
pub fn to_unconstrained(domain: &[ParamDomain], theta: &[f64]) -> Vec<f64> {
    theta
        .iter()
        .zip(domain)
        .map(|(&v, d)| match d {
            ParamDomain::Unbounded => v,
            ParamDomain::StrictlyPositive => math::ln(v),
        })
        .collect()
}

pub fn to_natural(domain: &[ParamDomain], u: &[f64]) -> Vec<f64> {
    let mut theta = vec![0.0; u.len()];
    to_natural_into(domain, u, &mut theta);
    theta
}

pub(crate) fn to_natural_into(domain: &[ParamDomain], u: &[f64], theta: &mut [f64]) {
    for ((t, &v), d) in theta.iter_mut().zip(u).zip(domain) {
        *t = match d {
            ParamDomain::Unbounded => v,
            ParamDomain::StrictlyPositive => math::exp(v),
        };
    }
}

/// Converts a natural-parameter gradient into the unconstrained one, in place.
pub fn chain_to_unconstrained(domain: &[ParamDomain], theta: &[f64], grad: &mut [f64]) {
    for ((g, &t), d) in grad.iter_mut().zip(theta).zip(domain) {
        if *d == ParamDomain::StrictlyPositive {
            *g *= t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(x: &[f64], g: Option<&mut [f64]>) -> f64 {
        if let Some(g) = g {
            g[0] = 2.0 * (x[0] - 1.0);
            g[1] = 8.0 * (x[1] + 2.0);
        }
        (x[0] - 1.0).powi(2) + 4.0 * (x[1] + 2.0).powi(2)
    }

    #[test]
    fn converges_on_quadratic() {
        let out = minimize(quadratic, vec![5.0, 5.0], &DescentOptions::default());
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8);
        assert!((out.x[1] + 2.0).abs() < 1e-8);
        assert!(out.value <= out.initial_value);
    }

    #[test]
    fn reaches_grad_tol_below_value_precision() {
        // Near the minimum the decrease per step is far below ulp(1e4).
        let f = |x: &[f64], g: Option<&mut [f64]>| {
            if let Some(g) = g {
                g[0] = 2e-3 * (x[0] - 1.0);
            }
            1e4 + 1e-3 * (x[0] - 1.0).powi(2)
        };
        let out = minimize(f, vec![3.0], &DescentOptions::default());
        assert!(out.converged, "{out:?}");
        assert!((out.x[0] - 1.0).abs() < 5e-6);
    }

    #[test]
    fn respects_iteration_cap() {
        let opts = DescentOptions {
            max_iters: 2,
            ..Default::default()
        };
        let out = minimize(quadratic, vec![50.0, 50.0], &opts);
        assert_eq!(out.iterations, 2);
        assert!(!out.converged);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // f = x for x > 0, infinite otherwise; never converges, never leaves the domain.
        let f = |x: &[f64], g: Option<&mut [f64]>| {
            if let Some(g) = g {
                g[0] = 1.0;
            }
            if x[0] > 0.0 {
                x[0]
            } else {
                f64::INFINITY
            }
        };
        let out = minimize(f, vec![1.0], &DescentOptions::default());
        assert!(out.x[0] > 0.0);
        assert!(out.value.is_finite());
    }

    #[test]
    fn non_finite_start_is_reported() {
        let f = |_: &[f64], _: Option<&mut [f64]>| f64::NAN;
        let out = minimize(f, vec![0.0], &DescentOptions::default());
        assert!(out.value.is_nan());
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn reparameterization_round_trip() {
        let dom = [ParamDomain::Unbounded, ParamDomain::StrictlyPositive];
        let theta = [-1.5, 0.25];
        let back = to_natural(&dom, &to_unconstrained(&dom, &theta));
        assert_eq!(back[0], -1.5);
        assert!((back[1] - 0.25).abs() < 1e-16);
    }
}
