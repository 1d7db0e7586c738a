//! Energy-based RANSAC (EB-RANSAC) and its supporting machinery.
//!
//! EB-RANSAC replaces the sample/score loop of RANSAC by a single
//! deterministic minimization. Every data point carries a binary selection
//! variable; summing those variables out of the joint energy-based model
//! leaves the objective
//!
//! ```text
//! L_ER(θ; D, β) = -(1/N) Σ_μ softplus(β - ℓ(θ; d_μ))
//! ```
//!
//! whose only hyperparameter `β` plays the role of the consensus threshold.
//!
//! The crate is `no_std` (it needs `alloc`). All transcendental functions go
//! through [`libm`] so results are bitwise reproducible across targets.
//!
//! Module map:
//! - [`loss`]: the per-point loss abstraction, data points and datasets.
//! - [`models`]: linear regression, Gaussian and exponential negative
//!   log-likelihoods, plus the population landscape of the exponential case.
//! - [`ebr`]: the EB-RANSAC loss, gradient, selection probabilities and the
//!   multi-start fit.
//! - [`baselines`]: RANSAC, LO-RANSAC and closed-form classical estimators.
//! - [`gibbs`]: the joint selection model, exact sampling of the selection
//!   vector and deterministic alternating maximization.
//! - [`theory`]: the cut-off threshold of the discrete-distribution minimizer
//!   and a brute-force oracle for it.
//! - [`synth`]: seeded generators for the three benchmark presets.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod ebr;
mod error;
pub mod gibbs;
pub mod loss;
pub mod math;
pub mod models;
pub mod optim;
pub mod quad;
pub mod rng;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use loss::{DataPoint, Dataset, LossModel, ParamDomain};
