//! Seeded generators for the three benchmark datasets.
//!
//! Inliers, outliers and the final shuffle each draw from their own RNG
//! stream, so changing the outlier count leaves the inlier draws untouched.
//! Labels are returned next to the dataset and are never part of it.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::loss::{DataPoint, Dataset};
use crate::rng;
use crate::{Error, Result};

const INLIER_STREAM: u64 = 0;
const OUTLIER_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "name", rename_all = "kebab-case"))]
pub enum Preset {
    /// Inliers on `y = slope·x + intercept` plus Gaussian noise, `x` uniform
    /// on `x_range`; outliers from an isotropic Gaussian.
    Linreg {
        slope: f64,
        intercept: f64,
        x_range: (f64, f64),
        noise_sd: f64,
        outlier_center: (f64, f64),
        outlier_sd: f64,
    },
    /// Inliers from `N(inlier_mean, inlier_sd²)`, outliers from `N(outlier_mean, outlier_sd²)`.
    Gaussian {
        inlier_mean: f64,
        inlier_sd: f64,
        outlier_mean: f64,
        outlier_sd: f64,
    },
    /// Inliers from `Exp(rate)`, outliers from `U[outlier_lo, outlier_hi]`.
    Exponential {
        rate: f64,
        outlier_lo: f64,
        outlier_hi: f64,
    },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Linreg { .. } => "linreg",
            Self::Gaussian { .. } => "gaussian",
            Self::Exponential { .. } => "exponential",
        }
    }

    /// Parameters of the inlier-generating model, as a model parameter vector.
    pub fn truth(&self) -> Vec<f64> {
        match *self {
            Self::Linreg { slope, intercept, .. } => alloc::vec![slope, intercept],
            Self::Gaussian {
                inlier_mean, inlier_sd, ..
            } => alloc::vec![inlier_mean, inlier_sd],
            Self::Exponential { rate, .. } => alloc::vec![rate],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PresetSpec {
    pub preset: Preset,
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub seed: u64,
}

impl PresetSpec {
    /// 100 inliers near `y = x + 3` and 20 Gaussian outliers.
    ///
    /// The x-range `[-3, 3]`, noise sd 0.1 and outlier Gaussian (center
    /// `(1, 0)`, sd 1.5) are chosen defaults, not published constants.
    pub fn linreg(seed: u64) -> Self {
        Self {
            preset: Preset::Linreg {
                slope: 1.0,
                intercept: 3.0,
                x_range: (-3.0, 3.0),
                noise_sd: 0.1,
                outlier_center: (1.0, 0.0),
                outlier_sd: 1.5,
            },
            n_inliers: 100,
            n_outliers: 20,
            seed,
        }
    }

    /// 200 inliers from `N(-1, 0.2²)` and 40 outliers from `N(1, 0.1²)`.
    pub fn gaussian(seed: u64) -> Self {
        Self {
            preset: Preset::Gaussian {
                inlier_mean: -1.0,
                inlier_sd: 0.2,
                outlier_mean: 1.0,
                outlier_sd: 0.1,
            },
            n_inliers: 200,
            n_outliers: 40,
            seed,
        }
    }

    /// 200 inliers from `Exp(2)` and 40 outliers from `U[6, 7]`.
    pub fn exponential(seed: u64) -> Self {
        Self {
            preset: Preset::Exponential {
                rate: 2.0,
                outlier_lo: 6.0,
                outlier_hi: 7.0,
            },
            n_inliers: 200,
            n_outliers: 40,
            seed,
        }
    }

    pub fn by_name(name: &str, seed: u64) -> Result<Self> {
        match name {
            "linreg" => Ok(Self::linreg(seed)),
            "gaussian" => Ok(Self::gaussian(seed)),
            "exponential" => Ok(Self::exponential(seed)),
            other => Err(Error::InvalidInput(alloc::format!("unknown preset {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inliers == 0 || self.n_outliers == 0 {
            return Err(Error::InvalidConfig("preset counts must be positive".into()));
        }
        let ok = match self.preset {
            Preset::Linreg {
                x_range,
                noise_sd,
                outlier_sd,
                ..
            } => x_range.0 < x_range.1 && noise_sd >= 0.0 && outlier_sd >= 0.0,
            Preset::Gaussian {
                inlier_sd, outlier_sd, ..
            } => inlier_sd >= 0.0 && outlier_sd >= 0.0,
            Preset::Exponential {
                rate,
                outlier_lo,
                outlier_hi,
            } => rate > 0.0 && outlier_lo < outlier_hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("preset parameters out of range".into()))
        }
    }
}

/// A generated dataset and its ground-truth labels (`true` = inlier).
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub dataset: Dataset,
    pub labels: Vec<bool>,
}

impl Generated {
    pub fn inliers(&self) -> impl Iterator<Item = &DataPoint> {
        self.dataset
            .points()
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l)
            .map(|(p, _)| p)
    }

    pub fn outliers(&self) -> impl Iterator<Item = &DataPoint> {
        self.dataset
            .points()
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| !l)
            .map(|(p, _)| p)
    }
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("validated standard deviation")
}

/// Generates the dataset described by `spec`.
pub fn generate(spec: &PresetSpec) -> Result<Generated> {
    spec.validate()?;
    let mut inl = rng::stream(spec.seed, INLIER_STREAM);
    let mut out = rng::stream(spec.seed, OUTLIER_STREAM);
    let mut labelled: Vec<(DataPoint, bool)> = Vec::with_capacity(spec.n_inliers + spec.n_outliers);
    match spec.preset {
        Preset::Linreg {
            slope,
            intercept,
            x_range: (lo, hi),
            noise_sd,
            outlier_center: (cx, cy),
            outlier_sd,
        } => {
            let noise = normal(0.0, noise_sd);
            for _ in 0..spec.n_inliers {
                let x = lo + (hi - lo) * inl.random::<f64>();
                let y = slope * x + intercept + noise.sample(&mut inl);
                labelled.push((DataPoint::supervised(x, y), true));
            }
            let ox = normal(cx, outlier_sd);
            let oy = normal(cy, outlier_sd);
            for _ in 0..spec.n_outliers {
                let x = ox.sample(&mut out);
                let y = oy.sample(&mut out);
                labelled.push((DataPoint::supervised(x, y), false));
            }
        }
        Preset::Gaussian {
            inlier_mean,
            inlier_sd,
            outlier_mean,
            outlier_sd,
        } => {
            let a = normal(inlier_mean, inlier_sd);
            labelled.extend((0..spec.n_inliers).map(|_| (DataPoint::unsupervised(a.sample(&mut inl)), true)));
            let b = normal(outlier_mean, outlier_sd);
            labelled.extend((0..spec.n_outliers).map(|_| (DataPoint::unsupervised(b.sample(&mut out)), false)));
        }
        Preset::Exponential {
            rate,
            outlier_lo,
            outlier_hi,
        } => {
            let e = Exp::new(rate).expect("validated rate");
            labelled.extend((0..spec.n_inliers).map(|_| (DataPoint::unsupervised(e.sample(&mut inl)), true)));
            labelled.extend((0..spec.n_outliers).map(|_| {
                let x = outlier_lo + (outlier_hi - outlier_lo) * out.random::<f64>();
                (DataPoint::unsupervised(x), false)
            }));
        }
    }
    labelled.shuffle(&mut rng::stream(spec.seed, SHUFFLE_STREAM));
    let (points, labels): (Vec<_>, Vec<_>) = labelled.into_iter().unzip();
    Ok(Generated {
        dataset: Dataset::new(points, Some(spec.seed))?,
        labels,
    })
}
