//! Numerically stable scalar helpers.
//!
//! Everything here is routed through `libm` so the core produces identical
//! bits with and without `std`.

/// `ln(1 + e^z)` without overflow: `max(z, 0) + ln(1 + e^{-|z|})`.
#[inline]
pub fn softplus(z: f64) -> f64 {
    let e = libm::exp(-z.abs());
    z.max(0.0) + libm::log1p(e)
}

/// Logistic function `1 / (1 + e^{-z})`, evaluated on the non-overflowing branch.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let e = libm::exp(-z.abs());
    let r = 1.0 / (1.0 + e);
    if z >= 0.0 {
        r
    } else {
        e * r
    }
}

/// `(softplus(z), sigmoid(z))` sharing one exponential.
#[inline]
pub fn softplus_and_sigmoid(z: f64) -> (f64, f64) {
    let e = libm::exp(-z.abs());
    let sp = z.max(0.0) + libm::log1p(e);
    let r = 1.0 / (1.0 + e);
    (sp, if z >= 0.0 { r } else { e * r })
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub(crate) fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len() as f64;
    xs.sum::<f64>() / n
}

pub(crate) fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
