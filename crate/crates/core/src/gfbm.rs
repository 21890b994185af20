//! Geometric fractional Brownian motion, `X(t) = X₀·exp(μt + σB_t^H)`, and
//! the log-normal law of its terminal value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbm::{FbmPath, Hurst};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("initial price must be positive and finite, got {0}")]
    InvalidX0(f64),
    #[error("drift must be finite, got {0}")]
    InvalidMu(f64),
    #[error("volatility must be non-negative and finite, got {0}")]
    InvalidSigma(f64),
    #[error("Hurst exponent must lie in (0, 1), got {0}")]
    InvalidHurst(f64),
    #[error("path Hurst exponent {path} does not match model Hurst exponent {model}")]
    HurstMismatch { model: f64, path: f64 },
    #[error("price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("log-normal scale must be non-negative and finite, got {0}")]
    InvalidScale(f64),
}

/// Model parameters; `mu` is per day and `sigma` scales standard fBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfbmParams {
    pub x0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub h: f64,
}

impl GfbmParams {
    pub fn new(x0: f64, mu: f64, sigma: f64, h: f64) -> Result<Self, ModelError> {
        let p = Self { x0, mu, sigma, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return Err(ModelError::InvalidX0(self.x0));
        }
        if !self.mu.is_finite() {
            return Err(ModelError::InvalidMu(self.mu));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ModelError::InvalidSigma(self.sigma));
        }
        self.hurst()?;
        Ok(())
    }

    pub fn hurst(&self) -> Result<Hurst, ModelError> {
        Hurst::new(self.h).map_err(|_| ModelError::InvalidHurst(self.h))
    }

    /// Same parameters with the initial price multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { x0: self.x0 * c, ..*self }
    }
}

/// `LN(m, s²)`: the law of `e^Z` with `Z ~ N(m, s²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalLaw {
    pub m: f64,
    pub s: f64,
}

impl LognormalLaw {
    pub fn new(m: f64, s: f64) -> Result<Self, ModelError> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(ModelError::InvalidScale(s));
        }
        Ok(Self { m, s })
    }

    /// Law with the given median and mean (`mean ≥ median`).
    pub fn from_median_mean(median: f64, mean: f64) -> Result<Self, ModelError> {
        let s2 = 2.0 * (mean / median).ln();
        Self::new(median.ln(), s2.sqrt())
    }
}

/// Log-normal mean, median and mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalStats {
    pub mean: f64,
    pub median: f64,
    pub mode: f64,
}

/// Price trajectory for one fBm path: `x0·exp(mu·t + sigma·B_t)`.
pub fn price_path(params: &GfbmParams, fbm: &FbmPath) -> Result<Vec<f64>, ModelError> {
    let path_h = fbm.hurst().value();
    if path_h != params.h {
        return Err(ModelError::HurstMismatch { model: params.h, path: path_h });
    }
    Ok(fbm
        .values()
        .iter()
        .enumerate()
        .map(|(t, &b)| {
            if t == 0 {
                params.x0
            } else {
                params.x0 * (params.mu * t as f64 + params.sigma * b).exp()
            }
        })
        .collect())
}

/// Terminal value of the price path only; avoids materialising the trajectory.
pub(crate) fn terminal_price(params: &GfbmParams, fbm: &FbmPath) -> f64 {
    let t = fbm.horizon();
    let b = fbm.values()[t];
    if t == 0 {
        return params.x0;
    }
    params.x0 * (params.mu * t as f64 + params.sigma * b).exp()
}

/// Exact law of `X(T)`: `m = ln x0 + mu·T`, `s = sigma·T^h`.
pub fn terminal_law(params: &GfbmParams, t_len: usize) -> LognormalLaw {
    let t = t_len as f64;
    LognormalLaw {
        m: params.x0.ln() + params.mu * t,
        s: params.sigma * t.powf(params.h),
    }
}

pub fn lognormal_stats(law: &LognormalLaw) -> LognormalStats {
    let s2 = law.s * law.s;
    LognormalStats {
        mean: (law.m + 0.5 * s2).exp(),
        median: law.m.exp(),
        mode: (law.m - s2).exp(),
    }
}

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// `P(X ≤ x)` for `X ~ LN(m, s²)`. A zero scale gives the step function at `e^m`.
pub fn lognormal_cdf(law: &LognormalLaw, x: f64) -> Result<f64, ModelError> {
    if x.is_nan() || x <= 0.0 {
        return Err(ModelError::NonPositivePrice(x));
    }
    if law.s == 0.0 {
        return Ok(if x.ln() >= law.m { 1.0 } else { 0.0 });
    }
    Ok(normal_cdf((x.ln() - law.m) / law.s))
}
