//! Long-memory price modelling with geometric fractional Brownian motion.
//!
//! The pipeline reads a daily `date,price` series ([`market_data`]), measures
//! its Hurst exponent with Haar wavelet variances ([`hurst`]) and its drift
//! and volatility from daily log returns, then simulates
//! `X(t) = X₀·exp(μt + σB_t^H)` ([`fbm`], [`gfbm`]) over a Monte Carlo
//! ensemble to obtain the terminal price distribution ([`montecarlo`]).

pub mod cli;
pub mod fbm;
pub mod gfbm;
pub mod hurst;
pub mod market_data;
pub mod montecarlo;

pub use fbm::{generate_fbm, generate_fgn, fgn_autocovariance, FbmError, FbmPath, Hurst};
pub use gfbm::{
    lognormal_cdf, lognormal_stats, price_path, terminal_law, GfbmParams, LognormalLaw,
    LognormalStats,
};
pub use hurst::{estimate_hurst, sliding_hurst, HurstEstimate};
pub use market_data::{
    estimate_drift_vol, fill_gaps, log_returns, parse_price_csv, DriftVol, PriceSeries,
    ReturnSeries,
};
pub use montecarlo::{
    empirical_cdf, fit_lognormal, forecast_report, run_ensemble, ForecastReport,
    TerminalDistribution,
};
