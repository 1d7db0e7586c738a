//! The EB-RANSAC minimizer over discrete distributions.
//!
//! For an empirical distribution `q` over `K` atoms, the distribution `p`
//! minimizing `-Σ_k q_k softplus(β + ln p_k)` keeps only atoms above a
//! cut-off threshold:
//!
//! ```text
//! p_k = (e^{-β} / T_cut) · max(q_k - T_cut, 0),   T_cut = e^{-β} · b(T_cut),
//! b(T) = Σ_k max(q_k - T, 0).
//! ```
//!
//! `h_β(T) = T - e^{-β} b(T)` is continuous, piecewise linear and strictly
//! increasing with `h_β(0) < 0 < h_β(T*)`, `T* = max_k q_k`, so the root is
//! unique and bisection on `(0, T*)` always brackets it.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, softplus};
use crate::{Error, Result};

/// Largest support size accepted by [`brute_force_minimizer`].
pub const MAX_BRUTE_FORCE_K: usize = 6;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Requires non-negative entries summing to 1 within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("distribution needs at least one atom".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInput(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(alloc::format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidInput("weights must have a positive finite sum".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `T* = max_k q_k`.
    pub fn max_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Sorted atoms and suffix sums for `O(log K)` evaluation of `b(T)`.
#[derive(Debug, Clone)]
pub struct MassProfile {
    sorted: Vec<f64>,
    // suffix[k] = Σ_{s >= k} sorted[s]; suffix[K] = 0.
    suffix: Vec<f64>,
}

impl MassProfile {
    pub fn new(q: &DiscreteDistribution) -> Self {
        let mut sorted = q.probs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut suffix = vec![0.0; sorted.len() + 1];
        for k in (0..sorted.len()).rev() {
            suffix[k] = suffix[k + 1] + sorted[k];
        }
        Self { sorted, suffix }
    }

    /// Number of atoms with `q_k <= t`: the linear piece containing `t`.
    fn piece(&self, t: f64) -> usize {
        self.sorted.partition_point(|&v| v <= t)
    }

    /// `b(T) = (Σ_{q_s > T} q_s) - #{q_s > T}·T`.
    pub fn b(&self, t: f64) -> f64 {
        let k = self.piece(t);
        self.suffix[k] - (self.sorted.len() - k) as f64 * t
    }

    fn h(&self, t: f64, exp_neg_beta: f64) -> f64 {
        t - exp_neg_beta * self.b(t)
    }

    /// Root of `T = e^{-β} (suffix[k] - (K-k) T)` on piece `k`.
    fn piece_root(&self, k: usize, beta: f64) -> f64 {
        self.suffix[k] / (math::exp(beta) + (self.sorted.len() - k) as f64)
    }
}

/// `b(T) = Σ_k max(q_k - T, 0)`.
pub fn b_of_t(q: &DiscreteDistribution, t: f64) -> f64 {
    MassProfile::new(q).b(t)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CutoffSolution {
    pub beta: f64,
    pub t_cut: f64,
    /// `ζ = e^β · T_cut`, the normalization multiplier.
    pub zeta: f64,
    pub p: DiscreteDistribution,
}

/// Default bisection tolerance, `1e-12 · T*`.
pub fn default_tol(q: &DiscreteDistribution) -> f64 {
    1e-12 * q.max_prob()
}

/// Solves `T = e^{-β} b(T)` on `(0, T*)`.
///
/// Bisection narrows the bracket below `tol`; since `h_β` is linear between
/// consecutive atoms, the root is then read off exactly from the piece(s)
/// the bracket touches, falling back to the midpoint if that lands outside.
pub fn solve_t_cut(q: &DiscreteDistribution, beta: f64, tol: f64) -> Result<CutoffSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if !beta.is_finite() {
        return Err(Error::InvalidInput("beta must be finite".into()));
    }
    let profile = MassProfile::new(q);
    let t_star = q.max_prob();
    let e = math::exp(-beta);

    let (mut lo, mut hi) = (0.0, t_star);
    for _ in 0..2048 {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if profile.h(mid, e) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut t_cut = mid;
    let mut piece = None;
    let mut best = profile.h(mid, e).abs();
    for k in profile.piece(lo)..=profile.piece(hi).min(profile.sorted.len() - 1) {
        let c = profile.piece_root(k, beta);
        if c > 0.0 && c < t_star && c >= lo - tol && c <= hi + tol {
            let r = profile.h(c, e).abs();
            if r < best {
                best = r;
                t_cut = c;
                piece = Some(k);
            }
        }
    }

    let zeta = math::exp(beta) * t_cut;
    // On piece k with m atoms above the cut and mass S above it,
    // p_j = q_j/S + (m q_j - S) e^{-β}/S, which avoids forming q_j - T_cut
    // when T_cut sits just below the mode.
    let above = piece.map(|k| (profile.sorted.len() - k, profile.suffix[k]));
    let p = q
        .probs
        .iter()
        .map(|&qk| {
            if qk <= t_cut {
                return 0.0;
            }
            let direct = e * (qk - t_cut) / t_cut;
            match above {
                Some((m, mass)) if piece == Some(profile.piece(t_cut)) => {
                    let v = qk / mass + (m as f64 * qk - mass) * e / mass;
                    if v > 0.0 {
                        v
                    } else {
                        direct
                    }
                }
                _ => direct,
            }
        })
        .collect();
    Ok(CutoffSolution {
        beta,
        t_cut,
        zeta,
        p: DiscreteDistribution { probs: p },
    })
}

/// The minimizing distribution at the default tolerance.
pub fn minimizer_distribution(q: &DiscreteDistribution, beta: f64) -> Result<DiscreteDistribution> {
    Ok(solve_t_cut(q, beta, default_tol(q))?.p)
}

/// Inverse of `β ↦ T_cut(β)`: `β(T) = ln b(T) - ln T` on `(0, T*)`.
pub fn beta_of_t(q: &DiscreteDistribution, t: f64) -> Result<f64> {
    let t_star = q.max_prob();
    if !(t > 0.0 && t < t_star) {
        return Err(Error::Domain {
            value: t,
            domain: "(0, max_k q_k)",
        });
    }
    Ok(math::ln(b_of_t(q, t)) - math::ln(t))
}

/// `-Σ_k q_k ln(1 + e^β ρ_k)`, the EB-RANSAC loss of candidate `ρ` under `q`.
pub fn discrete_ebr_loss(q: &DiscreteDistribution, rho: &DiscreteDistribution, beta: f64) -> f64 {
    -q.probs
        .iter()
        .zip(&rho.probs)
        .map(|(&qk, &rk)| {
            if rk > 0.0 && qk > 0.0 {
                qk * softplus(beta + math::ln(rk))
            } else {
                0.0
            }
        })
        .sum::<f64>()
}

fn loss_of(q: &[f64], rho: &[f64], beta: f64) -> f64 {
    -q.iter()
        .zip(rho)
        .map(|(&qk, &rk)| {
            if rk > 0.0 && qk > 0.0 {
                qk * softplus(beta + math::ln(rk))
            } else {
                0.0
            }
        })
        .sum::<f64>()
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

fn for_each_composition(total: usize, parts: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if parts == 1 {
        buf.push(total);
        f(buf);
        buf.pop();
        return;
    }
    for first in 0..=total {
        buf.push(first);
        for_each_composition(total - first, parts - 1, buf, f);
        buf.pop();
    }
}

const POLISH_STEPS: usize = 200;

/// Exhaustive search over the simplex grid with step `1/resolution`,
/// followed by 200 projected-gradient steps from the best grid point.
///
/// Independent of the cut-off construction; used to check it.
pub fn brute_force_minimizer(q: &DiscreteDistribution, beta: f64, resolution: usize) -> Result<DiscreteDistribution> {
    let k = q.len();
    if k > MAX_BRUTE_FORCE_K {
        return Err(Error::TooLarge {
            k,
            max: MAX_BRUTE_FORCE_K,
        });
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("resolution must be positive".into()));
    }
    let qs = q.probs();
    let r = resolution as f64;
    let mut best = vec![0.0; k];
    let mut best_loss = f64::INFINITY;
    let mut rho = vec![0.0; k];
    let mut buf = Vec::with_capacity(k);
    for_each_composition(resolution, k, &mut buf, &mut |c| {
        for (x, &ci) in rho.iter_mut().zip(c) {
            *x = ci as f64 / r;
        }
        let l = loss_of(qs, &rho, beta);
        if l < best_loss {
            best_loss = l;
            best.copy_from_slice(&rho);
        }
    });

    let eb = math::exp(beta);
    let mut step = 1.0 / (eb * eb).max(1e-300);
    let mut grad = vec![0.0; k];
    let mut trial = vec![0.0; k];
    for _ in 0..POLISH_STEPS {
        for ((g, &qk), &rk) in grad.iter_mut().zip(qs).zip(&best) {
            *g = -qk * eb / (1.0 + eb * rk);
        }
        let mut accepted = false;
        for _ in 0..60 {
            for ((t, &b), &g) in trial.iter_mut().zip(&best).zip(&grad) {
                *t = b - step * g;
            }
            project_to_simplex(&mut trial);
            let l = loss_of(qs, &trial, beta);
            if l < best_loss {
                best_loss = l;
                best.copy_from_slice(&trial);
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(DiscreteDistribution { probs: best })
}
