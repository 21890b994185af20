//! Test-only oracles, independent of the library's sampling path.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

/// fGn autocovariance written out directly from the closed form.
pub fn gamma(k: usize, h: f64) -> f64 {
    let k = k as f64;
    0.5 * ((k + 1.0).powf(2.0 * h) - 2.0 * k.powf(2.0 * h) + (k - 1.0).abs().powf(2.0 * h))
}

/// Lower Cholesky factor of a dense symmetric positive definite matrix.
pub fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                assert!(d > 0.0, "matrix not positive definite");
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// Dense-Cholesky fGn sampler: `x = L z` with `L Lᵀ = [γ(|i−j|)]`.
pub struct CholeskyFgn {
    l: Vec<Vec<f64>>,
}

impl CholeskyFgn {
    pub fn new(n: usize, h: f64) -> Self {
        assert!(n <= 256, "dense oracle is meant for small n");
        let cov: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| gamma(i.abs_diff(j), h)).collect())
            .collect();
        Self { l: cholesky(&cov) }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let z: Vec<f64> = (0..self.l.len()).map(|_| rng.sample(StandardNormal)).collect();
        self.l
            .iter()
            .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn oracle_rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Zero-mean sample covariance matrix of the given draws.
pub fn sample_covariance(draws: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = draws[0].len();
    let mut c = vec![vec![0.0; n]; n];
    for x in draws {
        for i in 0..n {
            for j in 0..n {
                c[i][j] += x[i] * x[j];
            }
        }
    }
    let count = draws.len() as f64;
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= count;
        }
    }
    c
}

/// Standard error of a zero-mean Gaussian sample covariance entry over `count` draws.
pub fn covariance_se(sii: f64, sjj: f64, sij: f64, count: usize) -> f64 {
    ((sii * sjj + sij * sij) / count as f64).sqrt()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
