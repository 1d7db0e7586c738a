//! Per-point losses and the data they are evaluated on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// One observation. `target` is absent for unsupervised problems such as
/// density estimation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DataPoint {
    pub input: Vec<f64>,
    pub target: Option<Vec<f64>>,
}

impl DataPoint {
    pub fn unsupervised(x: f64) -> Self {
        Self {
            input: vec![x],
            target: None,
        }
    }

    pub fn supervised(x: f64, y: f64) -> Self {
        Self {
            input: vec![x],
            target: Some(vec![y]),
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.input[0]
    }

    /// First target component.
    ///
    /// # Panics
    /// If the point has no target.
    #[inline]
    pub fn y(&self) -> f64 {
        self.target.as_ref().expect("data point has no target")[0]
    }

    fn is_finite(&self) -> bool {
        self.input.iter().all(|v| v.is_finite()) && self.target.as_ref().is_none_or(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Ordered, non-empty collection of data points. The index of a point is its
/// identity (selection vectors and masks refer to it).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    points: Vec<DataPoint>,
    seed: Option<u64>,
}

impl Dataset {
    pub fn new(points: Vec<DataPoint>, seed: Option<u64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("dataset must contain at least one point".into()));
        }
        let in_dim = points[0].input.len();
        let out_dim = points[0].target.as_ref().map(Vec::len);
        for (i, p) in points.iter().enumerate() {
            if p.input.len() != in_dim || p.target.as_ref().map(Vec::len) != out_dim {
                return Err(Error::InvalidInput(format!(
                    "data point {i} has a different shape from point 0"
                )));
            }
            if !p.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "data point {i} has a non-finite component"
                )));
            }
        }
        Ok(Self { points, seed })
    }

    /// Unsupervised dataset of scalars.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| DataPoint::unsupervised(x)).collect(), None)
    }

    /// Supervised dataset of `(x, y)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(x, y)| DataPoint::supervised(x, y)).collect(), None)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.points[0].input.len()
    }

    pub fn target_dim(&self) -> usize {
        self.points[0].target.as_ref().map_or(0, Vec::len)
    }

    /// A new dataset holding the points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.points[i].clone()).collect(), self.seed)
    }
}

/// Domain of one parameter coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ParamDomain {
    Unbounded,
    StrictlyPositive,
}

impl ParamDomain {
    pub fn contains(self, v: f64) -> bool {
        match self {
            Self::Unbounded => v.is_finite(),
            Self::StrictlyPositive => v.is_finite() && v > 0.0,
        }
    }
}

/// A parametric model seen only through its per-point loss `ℓ(θ; d)` and the
/// gradient of that loss in the natural parameterization.
pub trait LossModel {
    fn name(&self) -> &'static str;

    /// One entry per parameter coordinate; its length is the parameter dimension.
    fn domain(&self) -> &[ParamDomain];

    fn param_dim(&self) -> usize {
        self.domain().len()
    }

    fn point_loss(&self, theta: &[f64], point: &DataPoint) -> f64;

    /// Writes `∂ℓ/∂θ` into `grad` (length `param_dim`).
    fn point_loss_grad(&self, theta: &[f64], point: &DataPoint, grad: &mut [f64]);

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(Error::InvalidInput(format!(
                "{} expects {} parameters, got {}",
                self.name(),
                self.param_dim(),
                theta.len()
            )));
        }
        for (v, d) in theta.iter().zip(self.domain()) {
            if !d.contains(*v) {
                return Err(Error::Domain {
                    value: *v,
                    domain: match d {
                        ParamDomain::Unbounded => "finite reals",
                        ParamDomain::StrictlyPositive => "positive reals",
                    },
                });
            }
        }
        Ok(())
    }
}

/// Per-point losses, failing on the first non-finite one.
pub fn point_losses<M: LossModel + ?Sized>(model: &M, theta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    data.points()
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let l = model.point_loss(theta, p);
            if l.is_finite() {
                Ok(l)
            } else {
                Err(Error::NonFiniteLoss { index })
            }
        })
        .collect()
}

/// `(1/N) Σ_μ ℓ(θ; d_μ)`.
pub fn mean_loss<M: LossModel + ?Sized>(model: &M, theta: &[f64], data: &Dataset) -> Result<f64> {
    model.check_theta(theta)?;
    let losses = point_losses(model, theta, data)?;
    Ok(crate::math::mean(losses.into_iter()))
}

/// Gradient of [`mean_loss`] in the natural parameterization.
pub fn mean_loss_grad<M: LossModel + ?Sized>(model: &M, theta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    model.check_theta(theta)?;
    let k = model.param_dim();
    let mut total = vec![0.0; k];
    let mut g = vec![0.0; k];
    for (index, p) in data.points().iter().enumerate() {
        model.point_loss_grad(theta, p, &mut g);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { index });
        }
        for (t, gi) in total.iter_mut().zip(&g) {
            *t += gi;
        }
    }
    let n = data.len() as f64;
    total.iter_mut().for_each(|t| *t /= n);
    Ok(total)
}
