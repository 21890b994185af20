//! Exact fractional Gaussian noise and fractional Brownian motion on a
//! unit-step grid.
//!
//! Sampling uses circulant embedding (Davies–Harte): the Toeplitz covariance
//! of `n` fGn increments is embedded in a circulant matrix of size
//! `2(n−1)` rounded up to a power of two, diagonalised by one FFT. A sample
//! then costs one more FFT over complex Gaussian weights.
//!
//! Random streams are ChaCha8 keyed by a 64-bit seed, with the ChaCha stream
//! id selecting the path. Path `i` of an ensemble with master seed `s` is
//! therefore a pure function of `(s, i)`, independent of scheduling.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

/// Relative tolerance below which negative circulant eigenvalues are treated
/// as rounding noise and clamped to zero.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbmError {
    #[error("Hurst exponent must lie in (0, 1), got {0}")]
    InvalidHurst(f64),
    #[error("length must be at least 1")]
    EmptyLength,
    #[error("circulant embedding has eigenvalue {value} (max {max}); embedding is not positive semidefinite")]
    NegativeEigenvalue { value: f64, max: f64 },
}

/// Hurst exponent, validated to lie strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Hurst(f64);

impl Hurst {
    pub fn new(h: f64) -> Result<Self, FbmError> {
        if h > 0.0 && h < 1.0 {
            Ok(Self(h))
        } else {
            Err(FbmError::InvalidHurst(h))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Hurst {
    type Error = FbmError;

    fn try_from(h: f64) -> Result<Self, Self::Error> {
        Self::new(h)
    }
}

impl fmt::Display for Hurst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Autocovariance of unit-variance fGn at lag `k`:
/// `½(|k+1|^{2h} − 2|k|^{2h} + |k−1|^{2h})`.
pub fn fgn_autocovariance(k: u64, h: Hurst) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let two_h = 2.0 * h.0;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).powf(two_h))
}

/// RNG for path `index` under `master_seed`.
pub fn path_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Reusable fGn sampler for a fixed `(n, h)`.
///
/// Holds the square-rooted circulant spectrum and the FFT plan; both are
/// immutable, so one generator can be shared across threads.
#[derive(Clone)]
pub struct FgnGenerator {
    n: usize,
    h: Hurst,
    /// `sqrt(λ_k / m)` for each circulant eigenvalue.
    weights: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for FgnGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FgnGenerator")
            .field("n", &self.n)
            .field("h", &self.h)
            .field("embedding", &self.weights.len())
            .finish()
    }
}

impl FgnGenerator {
    pub fn new(n: usize, h: Hurst) -> Result<Self, FbmError> {
        if n == 0 {
            return Err(FbmError::EmptyLength);
        }
        if n == 1 {
            return Ok(Self { n, h, weights: Vec::new(), fft: None });
        }
        let m = (2 * (n - 1)).next_power_of_two();
        let half = m / 2;
        let mut row: Vec<Complex64> = (0..m)
            .map(|j| {
                let lag = if j <= half { j } else { m - j };
                Complex64::new(fgn_autocovariance(lag as u64, h), 0.0)
            })
            .collect();

        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);

        let max = row.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        let mut weights = Vec::with_capacity(m);
        for c in &row {
            let lambda = c.re;
            if lambda < -EIGENVALUE_TOLERANCE * max {
                return Err(FbmError::NegativeEigenvalue { value: lambda, max });
            }
            weights.push((lambda.max(0.0) / m as f64).sqrt());
        }
        Ok(Self { n, h, weights, fft: Some(fft) })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn hurst(&self) -> Hurst {
        self.h
    }

    /// Size of the circulant embedding (0 when `n = 1`).
    pub fn embedding_size(&self) -> usize {
        self.weights.len()
    }

    /// Draws `n` increments. Consumes `2m` standard normals from `rng`
    /// (one when `n = 1`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let Some(fft) = &self.fft else {
            return vec![rng.sample(StandardNormal)];
        };
        let mut buf: Vec<Complex64> = self
            .weights
            .iter()
            .map(|&w| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * w, im * w)
            })
            .collect();
        fft.process(&mut buf);
        buf.truncate(self.n);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// `n` fGn increments for `(h, seed)`; identical to path 0 of an ensemble
/// seeded with `seed`.
pub fn generate_fgn(n: usize, h: Hurst, seed: u64) -> Result<Vec<f64>, FbmError> {
    let gen = FgnGenerator::new(n, h)?;
    Ok(gen.sample(&mut path_rng(seed, 0)))
}

/// A standard fBm trajectory sampled at integer days `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    h: Hurst,
    values: Vec<f64>,
}

impl FbmPath {
    /// Cumulative sum of increments with a leading zero.
    pub fn from_increments(h: Hurst, increments: &[f64]) -> Self {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        values.push(acc);
        for dx in increments {
            acc += dx;
            values.push(acc);
        }
        Self { h, values }
    }

    pub fn hurst(&self) -> Hurst {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Horizon `T`; the path holds `T + 1` points.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    /// `t,value` dump for plotting.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("t,value\n");
        for (t, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }
}

/// fBm sampler over a fixed horizon.
#[derive(Debug, Clone)]
pub struct FbmGenerator {
    fgn: FgnGenerator,
}

impl FbmGenerator {
    pub fn new(t_len: usize, h: Hurst) -> Result<Self, FbmError> {
        Ok(Self { fgn: FgnGenerator::new(t_len, h)? })
    }

    pub fn horizon(&self) -> usize {
        self.fgn.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FbmPath {
        FbmPath::from_increments(self.fgn.hurst(), &self.fgn.sample(rng))
    }

    /// Path `index` of the ensemble seeded by `master_seed`.
    pub fn sample_path(&self, master_seed: u64, index: u64) -> FbmPath {
        self.sample(&mut path_rng(master_seed, index))
    }
}

pub fn generate_fbm(t_len: usize, h: Hurst, seed: u64) -> Result<FbmPath, FbmError> {
    Ok(FbmGenerator::new(t_len, h)?.sample_path(seed, 0))
}
