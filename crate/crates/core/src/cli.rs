//! Command-line front end: `ingest`, `hurst`, `stats` and `forecast`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::gfbm::GfbmParams;
use crate::hurst::{estimate_hurst, sliding_hurst, sliding_track_csv};
use crate::market_data::{
    estimate_drift_vol, fill_gaps, log_returns, parse_price_csv, sliding_drift_vol, PriceSeries,
};
use crate::montecarlo::{forecast_report_with, run_ensemble_with, Binning, EnsembleOptions};

pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_HORIZON: usize = 180;

#[derive(Debug, Parser)]
#[command(name = "fbm-forecast", version, about = "Hurst estimation and geometric fBm price forecasts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, validate and gap-fill a price CSV.
    Ingest(CommonArgs),
    /// Hurst exponent of the whole series, optionally a sliding-window track.
    Hurst(WindowArgs),
    /// Daily drift and volatility, optionally over sliding windows.
    Stats(WindowArgs),
    /// Monte Carlo forecast of the price distribution at a horizon.
    Forecast(ForecastArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// `date,price` CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sliding window length in days.
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    #[arg(long, default_value_t = DEFAULT_PATHS)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for path generation; output does not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Price threshold to query; repeatable.
    #[arg(long = "threshold", allow_negative_numbers = true)]
    pub thresholds: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Histogram bin count (Freedman–Diaconis when omitted).
    #[arg(long)]
    pub bins: Option<usize>,
    /// Also write every simulated price path.
    #[arg(long)]
    pub store_paths: bool,
}

/// Everything a command needs, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_path: Option<PathBuf>,
    pub horizon_days: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub h_override: Option<f64>,
    pub mu_override: Option<f64>,
    pub sigma_override: Option<f64>,
    pub x0_override: Option<f64>,
    pub window: Option<usize>,
    pub output_dir: PathBuf,
    pub jobs: Option<usize>,
    pub thresholds: Vec<f64>,
    pub bins: Option<usize>,
    pub store_paths: bool,
}

impl RunConfig {
    pub fn new(input_path: Option<PathBuf>, output_dir: PathBuf) -> Self {
        Self {
            input_path,
            horizon_days: DEFAULT_HORIZON,
            n_paths: DEFAULT_PATHS,
            seed: 0,
            h_override: None,
            mu_override: None,
            sigma_override: None,
            x0_override: None,
            window: None,
            output_dir,
            jobs: None,
            thresholds: Vec::new(),
            bins: None,
            store_paths: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_paths >= 2, "ensemble size must be at least 2, got {}", self.n_paths);
        ensure!(self.horizon_days >= 1, "horizon must be at least 1 day");
        if let Some(h) = self.h_override {
            ensure!(h > 0.0 && h < 1.0, "--h must lie in (0, 1), got {h}");
        }
        if let Some(mu) = self.mu_override {
            ensure!(mu.is_finite(), "--mu must be finite, got {mu}");
        }
        if let Some(sigma) = self.sigma_override {
            ensure!(sigma >= 0.0 && sigma.is_finite(), "--sigma must be non-negative, got {sigma}");
        }
        if let Some(x0) = self.x0_override {
            ensure!(x0 > 0.0 && x0.is_finite(), "--x0 must be positive, got {x0}");
        }
        if let Some(w) = self.window {
            ensure!(w >= 1, "--window must be at least 1");
        }
        if let Some(j) = self.jobs {
            ensure!(j >= 1, "--jobs must be at least 1");
        }
        if let Some(b) = self.bins {
            ensure!(b >= 1, "--bins must be at least 1");
        }
        for &x in &self.thresholds {
            ensure!(x.is_finite(), "--threshold must be finite, got {x}");
        }
        Ok(())
    }

    fn input(&self) -> Result<&Path> {
        self.input_path.as_deref().context("--input is required")
    }
}

impl From<CommonArgs> for RunConfig {
    fn from(a: CommonArgs) -> Self {
        RunConfig::new(a.input, a.output_dir)
    }
}

impl From<WindowArgs> for RunConfig {
    fn from(a: WindowArgs) -> Self {
        RunConfig { window: a.window, ..a.common.into() }
    }
}

impl From<ForecastArgs> for RunConfig {
    fn from(a: ForecastArgs) -> Self {
        RunConfig {
            horizon_days: a.horizon,
            n_paths: a.paths,
            seed: a.seed,
            h_override: a.h,
            mu_override: a.mu,
            sigma_override: a.sigma,
            x0_override: a.x0,
            jobs: a.jobs,
            thresholds: a.thresholds,
            bins: a.bins,
            store_paths: a.store_paths,
            ..a.common.into()
        }
    }
}

/// Rounds to four significant figures for human-readable output.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Reads a price CSV and fills calendar gaps.
pub fn load_series(path: &Path) -> Result<PriceSeries> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let raw = parse_price_csv(file).with_context(|| format!("{}", path.display()))?;
    Ok(fill_gaps(&raw))
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

pub fn cmd_ingest(config: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    let series = load_series(config.input()?)?;
    let path = write_output(&config.output_dir, "cleaned.csv", &series.to_csv())?;
    writeln!(out, "points: {}", series.len())?;
    writeln!(out, "interpolated: {}", series.interpolated_count())?;
    writeln!(out, "range: {}..{}", series.first_date(), series.last_date())?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

pub fn cmd_hurst(config: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    let series = load_series(config.input()?)?;
    let est = estimate_hurst(series.prices()).context("whole-series Hurst estimate")?;
    writeln!(out, "H = {} ± {}", sig4(est.h), sig4(est.dh))?;
    if !est.in_unit_interval() {
        eprintln!("warning: estimate {} lies outside (0, 1)", est.h);
    }
    if let Some(w) = config.window {
        if w > series.len() {
            bail!("window {w} exceeds series length {}", series.len());
        }
        let track = sliding_hurst(&series, w)?;
        let path = write_output(&config.output_dir, &format!("hurst_w{w}.csv"), &sliding_track_csv(&track))?;
        writeln!(out, "wrote {} windows to {}", track.len(), path.display())?;
    }
    Ok(())
}

pub fn cmd_stats(config: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    use std::fmt::Write as _;
    let series = load_series(config.input()?)?;
    let dv = estimate_drift_vol(&log_returns(&series))?;
    writeln!(out, "mu = {}, sigma = {}", sig4(dv.mu), sig4(dv.sigma))?;
    if let Some(w) = config.window {
        let track = sliding_drift_vol(&series, w)?;
        let mut csv = String::from("start_date,mu,sigma\n");
        for (d, v) in &track {
            let _ = writeln!(csv, "{},{},{}", d.format("%Y-%m-%d"), v.mu, v.sigma);
        }
        let path = write_output(&config.output_dir, &format!("drift_vol_w{w}.csv"), &csv)?;
        writeln!(out, "wrote {} windows to {}", track.len(), path.display())?;
    }
    Ok(())
}

/// Resolves model parameters. Prices are read only when some parameter is
/// not overridden.
pub fn resolve_params(config: &RunConfig) -> Result<GfbmParams> {
    let needs_series = config.x0_override.is_none()
        || config.h_override.is_none()
        || config.mu_override.is_none()
        || config.sigma_override.is_none();
    let series = if needs_series { Some(load_series(config.input()?)?) } else { None };

    let h = match config.h_override {
        Some(h) => h,
        None => {
            let s = series.as_ref().expect("series loaded");
            estimate_hurst(s.prices()).context("estimating Hurst exponent")?.h
        }
    };
    let (mu, sigma) = match (config.mu_override, config.sigma_override) {
        (Some(mu), Some(sigma)) => (mu, sigma),
        (mu, sigma) => {
            let s = series.as_ref().expect("series loaded");
            let dv = estimate_drift_vol(&log_returns(s))?;
            (mu.unwrap_or(dv.mu), sigma.unwrap_or(dv.sigma))
        }
    };
    let x0 = match config.x0_override {
        Some(x0) => x0,
        None => series.as_ref().expect("series loaded").last_price(),
    };
    GfbmParams::new(x0, mu, sigma, h).context("invalid model parameters")
}

pub fn cmd_forecast(config: &RunConfig, out: &mut dyn std::io::Write) -> Result<()> {
    let params = resolve_params(config)?;
    let options = EnsembleOptions { jobs: config.jobs, store_paths: config.store_paths };
    let dist = run_ensemble_with(
        &params,
        config.horizon_days,
        config.n_paths,
        config.seed,
        &options,
    )?;
    let binning = config.bins.map_or(Binning::FreedmanDiaconis, Binning::Count);
    let report = forecast_report_with(&dist, &config.thresholds, binning);

    let dir = &config.output_dir;
    write_output(dir, "report.json", &report.to_json())?;
    write_output(dir, "histogram.csv", &report.histogram_csv())?;
    write_output(dir, "cdf.csv", &report.cdf_csv())?;
    if let Some(paths) = dist.paths() {
        let path_dir = dir.join("paths");
        for (i, path) in paths.iter().enumerate() {
            let mut csv = String::from("t,value\n");
            for (t, v) in path.iter().enumerate() {
                csv.push_str(&format!("{t},{v}\n"));
            }
            write_output(&path_dir, &format!("path_{i:05}.csv"), &csv)?;
        }
    }

    writeln!(
        out,
        "params: x0 = {}, mu = {}, sigma = {}, H = {}",
        sig4(params.x0),
        sig4(params.mu),
        sig4(params.sigma),
        sig4(params.h)
    )?;
    writeln!(out, "median forecast at day {}: {}", config.horizon_days, sig4(report.headline()))?;
    writeln!(out, "mean: {}, mode: {}", sig4(report.stats.mean), sig4(report.stats.mode))?;
    for q in &report.queries[..config.thresholds.len()] {
        writeln!(
            out,
            "P(X <= {}) = {}%, P(X > {}) = {}%",
            sig4(q.x),
            sig4(100.0 * q.p_le),
            sig4(q.x),
            sig4(100.0 * q.p_gt)
        )?;
    }
    writeln!(out, "wrote report.json, histogram.csv, cdf.csv to {}", dir.display())?;
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => {
            let c: RunConfig = a.into();
            c.validate()?;
            cmd_ingest(&c, out)
        }
        Command::Hurst(a) => {
            let c: RunConfig = a.into();
            c.validate()?;
            cmd_hurst(&c, out)
        }
        Command::Stats(a) => {
            let c: RunConfig = a.into();
            c.validate()?;
            cmd_stats(&c, out)
        }
        Command::Forecast(a) => {
            let c: RunConfig = a.into();
            c.validate()?;
            cmd_forecast(&c, out)
        }
    }
}
