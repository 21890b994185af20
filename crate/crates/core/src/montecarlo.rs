//! Monte Carlo ensembles of geometric fBm and their terminal distributions.
//!
//! Path `i` draws from the stream `(master_seed, i)`, so an ensemble is a
//! pure function of its inputs no matter how many workers generate it.
//! Generation runs in parallel; sorting, fitting and reporting run on the
//! collected samples afterwards.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fbm::{FbmError, FbmGenerator};
use crate::gfbm::{
    lognormal_cdf, lognormal_stats, price_path, terminal_price, GfbmParams, LognormalLaw,
    LognormalStats, ModelError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("ensemble size must be at least 2, got {0}")]
    TooFewPaths(usize),
    #[error("horizon must be at least 1 day")]
    ZeroHorizon,
    #[error("need at least 2 samples to fit, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index} is not a positive finite price: {value}")]
    BadSample { index: usize, value: f64 },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fbm(#[from] FbmError),
}

#[derive(Debug, Clone, Default)]
pub struct EnsembleOptions {
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub jobs: Option<usize>,
    /// Keep every price trajectory, not only terminal values.
    pub store_paths: bool,
}

/// Terminal prices of an ensemble with their log-space fit.
#[derive(Debug, Clone)]
pub struct TerminalDistribution {
    samples: Vec<f64>,
    fit: LognormalLaw,
    params: GfbmParams,
    horizon: usize,
    master_seed: u64,
    paths: Option<Vec<Vec<f64>>>,
}

impl TerminalDistribution {
    /// Wraps externally produced terminal prices.
    pub fn from_samples(
        mut samples: Vec<f64>,
        params: GfbmParams,
        horizon: usize,
        master_seed: u64,
    ) -> Result<Self, EnsembleError> {
        let fit = fit_lognormal(&samples)?;
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples, fit, params, horizon, master_seed, paths: None })
    }

    /// Ascending terminal prices.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn fit(&self) -> LognormalLaw {
        self.fit
    }

    pub fn params(&self) -> GfbmParams {
        self.params
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Full trajectories in path-index order, when requested.
    pub fn paths(&self) -> Option<&[Vec<f64>]> {
        self.paths.as_deref()
    }

    /// Median of the samples themselves (mean of the middle pair for even n).
    pub fn sample_median(&self) -> f64 {
        let n = self.samples.len();
        if n % 2 == 1 {
            self.samples[n / 2]
        } else {
            0.5 * (self.samples[n / 2 - 1] + self.samples[n / 2])
        }
    }
}

pub fn run_ensemble(
    params: &GfbmParams,
    t_len: usize,
    n: usize,
    master_seed: u64,
) -> Result<TerminalDistribution, EnsembleError> {
    run_ensemble_with(params, t_len, n, master_seed, &EnsembleOptions::default())
}

type StoredPaths = Vec<Vec<f64>>;

pub fn run_ensemble_with(
    params: &GfbmParams,
    t_len: usize,
    n: usize,
    master_seed: u64,
    options: &EnsembleOptions,
) -> Result<TerminalDistribution, EnsembleError> {
    params.validate()?;
    if n < 2 {
        return Err(EnsembleError::TooFewPaths(n));
    }
    if t_len == 0 {
        return Err(EnsembleError::ZeroHorizon);
    }
    let gen = FbmGenerator::new(t_len, params.hurst()?)?;

    let simulate = || -> Result<(Vec<f64>, Option<StoredPaths>), EnsembleError> {
        if options.store_paths {
            let paths: Vec<Vec<f64>> = (0..n as u64)
                .into_par_iter()
                .map(|i| price_path(params, &gen.sample_path(master_seed, i)))
                .collect::<Result<_, _>>()?;
            let terminal = paths.iter().map(|p| p[t_len]).collect();
            Ok((terminal, Some(paths)))
        } else {
            let terminal = (0..n as u64)
                .into_par_iter()
                .map(|i| terminal_price(params, &gen.sample_path(master_seed, i)))
                .collect();
            Ok((terminal, None))
        }
    };

    let (terminal, paths) = match options.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| EnsembleError::Pool(e.to_string()))?
            .install(simulate)?,
        None => simulate()?,
    };

    let mut dist = TerminalDistribution::from_samples(terminal, *params, t_len, master_seed)?;
    dist.paths = paths;
    Ok(dist)
}

/// Moment fit in log space: `m` is the mean of `ln x`, `s` its sample
/// standard deviation (n−1 denominator).
pub fn fit_lognormal(samples: &[f64]) -> Result<LognormalLaw, EnsembleError> {
    let n = samples.len();
    if n < 2 {
        return Err(EnsembleError::TooFewSamples(n));
    }
    if let Some((index, &value)) =
        samples.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x.is_finite()))
    {
        return Err(EnsembleError::BadSample { index, value });
    }
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    if logs.iter().all(|&l| l == logs[0]) {
        return Ok(LognormalLaw { m: logs[0], s: 0.0 });
    }
    let m = logs.iter().sum::<f64>() / n as f64;
    let ss: f64 = logs.iter().map(|l| (l - m) * (l - m)).sum();
    Ok(LognormalLaw { m, s: (ss / (n - 1) as f64).sqrt() })
}

/// `F_X(x)`: the fraction of samples `≤ x`.
pub fn empirical_cdf(dist: &TerminalDistribution, x: f64) -> f64 {
    ecdf_sorted(&dist.samples, x)
}

fn ecdf_sorted(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&s| s <= x) as f64 / sorted.len() as f64
}

/// Fitted-law CDF that accepts any finite price (zero for `x ≤ 0`).
fn analytic_cdf(law: &LognormalLaw, x: f64) -> f64 {
    lognormal_cdf(law, x).unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityQuery {
    pub x: f64,
    pub p_le: f64,
    pub p_gt: f64,
    pub analytic_p_le: f64,
}

impl ProbabilityQuery {
    pub fn analytic_p_gt(&self) -> f64 {
        1.0 - self.analytic_p_le
    }
}

pub fn query(dist: &TerminalDistribution, x: f64) -> ProbabilityQuery {
    let p_le = empirical_cdf(dist, x);
    ProbabilityQuery { x, p_le, p_gt: 1.0 - p_le, analytic_p_le: analytic_cdf(&dist.fit, x) }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Binning {
    /// Width `2·IQR·n^{−1/3}`; Sturges' rule when the IQR vanishes.
    #[default]
    FreedmanDiaconis,
    Count(usize),
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub x: f64,
    pub empirical_p: f64,
    pub analytic_p: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Upper bound on the automatic bin count.
const MAX_BINS: usize = 10_000;

pub fn histogram(sorted: &[f64], binning: Binning) -> Vec<HistogramBin> {
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    if hi == lo {
        // all mass at one price: a single unit-width bin centred on it
        return vec![HistogramBin { left: lo - 0.5, right: lo + 0.5, count: n, density: 1.0 }];
    }
    let bins = match binning {
        Binning::Count(k) => k.max(1),
        Binning::FreedmanDiaconis => {
            let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
            if iqr > 0.0 {
                let width = 2.0 * iqr / (n as f64).cbrt();
                (((hi - lo) / width).ceil() as usize).clamp(1, MAX_BINS)
            } else {
                ((n as f64).log2().ceil() as usize + 1).max(1)
            }
        }
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in sorted {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| {
            let left = lo + width * k as f64;
            let right = if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 };
            HistogramBin { left, right, count, density: count as f64 / (n as f64 * width) }
        })
        .collect()
}

/// Empirical and fitted CDF at every distinct sample.
pub fn cdf_points(dist: &TerminalDistribution) -> Vec<CdfPoint> {
    let s = &dist.samples;
    let n = s.len() as f64;
    let mut out = Vec::new();
    for (i, &x) in s.iter().enumerate() {
        if i + 1 < s.len() && s[i + 1] == x {
            continue;
        }
        out.push(CdfPoint {
            x,
            empirical_p: (i + 1) as f64 / n,
            analytic_p: analytic_cdf(&dist.fit, x),
        });
    }
    out
}

/// Summary of a forecast ensemble. Serializes to the run-report JSON; the
/// histogram and CDF tables go to their own CSV files.
#[derive(Debug, Clone, Serialize)]
pub struct ForecastReport {
    pub params: GfbmParams,
    pub horizon: usize,
    pub n: usize,
    pub master_seed: u64,
    pub fit: LognormalLaw,
    pub stats: LognormalStats,
    pub empirical_median: f64,
    /// Thresholds in the order given, then the fitted mean, then the fitted mode.
    pub queries: Vec<ProbabilityQuery>,
    #[serde(skip)]
    pub histogram: Vec<HistogramBin>,
    #[serde(skip)]
    pub cdf: Vec<CdfPoint>,
}

impl ForecastReport {
    /// The point forecast: median of the fitted law.
    pub fn headline(&self) -> f64 {
        self.stats.median
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count,density\n");
        for b in &self.histogram {
            let _ = writeln!(out, "{},{},{},{}", b.left, b.right, b.count, b.density);
        }
        out
    }

    pub fn cdf_csv(&self) -> String {
        let mut out = String::from("x,empirical_p,analytic_p\n");
        for p in &self.cdf {
            let _ = writeln!(out, "{},{},{}", p.x, p.empirical_p, p.analytic_p);
        }
        out
    }
}

pub fn forecast_report(dist: &TerminalDistribution, thresholds: &[f64]) -> ForecastReport {
    forecast_report_with(dist, thresholds, Binning::default())
}

pub fn forecast_report_with(
    dist: &TerminalDistribution,
    thresholds: &[f64],
    binning: Binning,
) -> ForecastReport {
    let stats = lognormal_stats(&dist.fit);
    let queries = thresholds
        .iter()
        .chain([stats.mean, stats.mode].iter())
        .map(|&x| query(dist, x))
        .collect();
    ForecastReport {
        params: dist.params,
        horizon: dist.horizon,
        n: dist.n(),
        master_seed: dist.master_seed,
        fit: dist.fit,
        stats,
        empirical_median: dist.sample_median(),
        queries,
        histogram: histogram(&dist.samples, binning),
        cdf: cdf_points(dist),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn params(x0: f64, mu: f64, sigma: f64, h: f64) -> GfbmParams {
        GfbmParams::new(x0, mu, sigma, h).unwrap()
    }

    #[test]
    fn degenerate_ensemble() {
        let p = params(100.0, 0.01, 0.0, 0.6);
        let d = run_ensemble(&p, 50, 100, 7).unwrap();
        let expected = 100.0 * (0.5f64).exp();
        assert!(d.samples().iter().all(|&x| x == d.samples()[0]));
        assert!((d.samples()[0] - expected).abs() < 1e-10);
        assert_eq!(d.fit().s, 0.0);
        let r = forecast_report(&d, &[expected * 0.99, expected * 1.01]);
        assert_eq!(r.queries[0].p_le, 0.0);
        assert_eq!(r.queries[1].p_le, 1.0);
        assert_eq!(r.histogram.len(), 1);
        assert_eq!(r.histogram[0].count, 100);
        assert_eq!(r.cdf.len(), 1);
    }

    #[test]
    fn ensemble_errors() {
        let p = params(1.0, 0.0, 0.1, 0.5);
        assert_eq!(run_ensemble(&p, 10, 1, 0).unwrap_err(), EnsembleError::TooFewPaths(1));
        assert_eq!(run_ensemble(&p, 0, 10, 0).unwrap_err(), EnsembleError::ZeroHorizon);
        let bad = GfbmParams { x0: -1.0, ..p };
        assert!(matches!(run_ensemble(&bad, 10, 10, 0), Err(EnsembleError::Model(_))));
    }

    #[test]
    fn worker_count_does_not_change_samples() {
        let p = params(955.73, 0.0031, 0.0428, 0.495);
        let one = EnsembleOptions { jobs: Some(1), store_paths: false };
        let eight = EnsembleOptions { jobs: Some(8), store_paths: true };
        let a = run_ensemble_with(&p, 187, 500, 42, &one).unwrap();
        let b = run_ensemble_with(&p, 187, 500, 42, &eight).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert!(a.paths().is_none());
        let paths = b.paths().unwrap();
        assert_eq!(paths.len(), 500);
        assert!(paths.iter().all(|p| p.len() == 188 && p[0] == 955.73));
    }

    #[test]
    fn ecdf_tails() {
        let p = params(10.0, 0.0, 0.05, 0.5);
        let d = run_ensemble(&p, 20, 200, 3).unwrap();
        let s = d.samples();
        assert_eq!(empirical_cdf(&d, s[0] * 0.999), 0.0);
        assert_eq!(empirical_cdf(&d, s[s.len() - 1]), 1.0);
        assert_eq!(empirical_cdf(&d, s[0]), 1.0 / 200.0);
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fit_examples() {
        let law = fit_lognormal(&[5.0; 4]).unwrap();
        assert_eq!(law, LognormalLaw { m: 5f64.ln(), s: 0.0 });
        let law = fit_lognormal(&[E, E.powi(3)]).unwrap();
        assert!((law.m - 2.0).abs() < 1e-14);
        assert!((law.s - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(fit_lognormal(&[1.0]), Err(EnsembleError::TooFewSamples(1)));
        assert_eq!(
            fit_lognormal(&[1.0, 0.0, 2.0]),
            Err(EnsembleError::BadSample { index: 1, value: 0.0 })
        );
    }

    #[test]
    fn quantiles_and_median() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        let p = params(1.0, 0.0, 0.1, 0.5);
        let d = TerminalDistribution::from_samples(vec![3.0, 1.0, 2.0], p, 1, 0).unwrap();
        assert_eq!(d.samples(), &[1.0, 2.0, 3.0]);
        assert_eq!(d.sample_median(), 2.0);
    }

    #[test]
    fn histogram_bins_cover_samples() {
        let sorted: Vec<f64> = (0..1000).map(|i| (i as f64 / 100.0).exp()).collect();
        let bins = histogram(&sorted, Binning::FreedmanDiaconis);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 1000);
        assert_eq!(bins[0].left, sorted[0]);
        assert_eq!(bins.last().unwrap().right, sorted[999]);
        let area: f64 = bins.iter().map(|b| b.density * (b.right - b.left)).sum();
        assert!((area - 1.0).abs() < 1e-9);

        let bins = histogram(&sorted, Binning::Count(7));
        assert_eq!(bins.len(), 7);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 1000);
    }

    #[test]
    fn report_layout() {
        let p = params(955.73, 0.0031, 0.0428, 0.495);
        let d = run_ensemble(&p, 187, 1000, 1).unwrap();
        let r = forecast_report(&d, &[955.73, 5000.0]);
        assert_eq!(r.queries.len(), 4);
        assert_eq!(r.queries[2].x, r.stats.mean);
        assert_eq!(r.queries[3].x, r.stats.mode);
        for q in &r.queries {
            assert_eq!(q.p_le + q.p_gt, 1.0);
        }
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["params", "horizon", "n", "master_seed", "fit", "stats", "queries"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["params"]["x0"], 955.73);
        assert_eq!(json["n"], 1000);
        assert!(json["queries"][0].get("analytic_p_le").is_some());
        assert!(json.get("histogram").is_none());
        assert!(r.histogram_csv().starts_with("bin_left,bin_right,count,density\n"));
        assert!(r.cdf_csv().starts_with("x,empirical_p,analytic_p\n"));
        assert_eq!(r.cdf_csv().lines().count(), r.cdf.len() + 1);
    }
}
