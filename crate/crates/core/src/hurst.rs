//! Hurst exponent from the scaling of Haar wavelet detail variances.
//!
//! The input (a price level series, not returns) is left-padded with zeros
//! to a power of two and decomposed with the orthonormal Haar DWT. For an
//! fBm-like signal the detail variance at octave `j` grows as
//! `2^{j(2H+1)}`, so the OLS slope `a` of `log₂ Var_j` against `j` gives
//! `H = (a − 1) / 2`.

use chrono::NaiveDate;
use rayon::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

use crate::market_data::{sliding_windows, DataError, PriceSeries};

/// Shortest series accepted by [`estimate_hurst`].
pub const MIN_LENGTH: usize = 64;
/// An octave enters the fit only if it has at least this many coefficients.
pub const MIN_COEFFICIENTS: usize = 8;
/// Minimum number of octaves in the regression.
pub const MIN_OCTAVES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HurstError {
    #[error("series has {0} points; at least {MIN_LENGTH} are required")]
    TooShort(usize),
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("only {0} octave(s) have at least {MIN_COEFFICIENTS} coefficients; {MIN_OCTAVES} needed")]
    TooFewOctaves(usize),
    #[error("detail variance at octave {0} is zero")]
    DegenerateOctave(usize),
    #[error("series contains non-finite values")]
    NonFinite,
    #[error(transparent)]
    Window(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HurstEstimate {
    pub h: f64,
    /// Standard error of `h` (half the OLS slope standard error).
    pub dh: f64,
    /// Inclusive octave range used in the fit.
    pub octaves_used: (usize, usize),
    pub slope: f64,
    pub n_padded: usize,
}

impl HurstEstimate {
    /// Whether `h` falls inside (0, 1). Estimates are never clipped.
    pub fn in_unit_interval(&self) -> bool {
        self.h > 0.0 && self.h < 1.0
    }
}

/// Prepends zeros up to the next power of two.
pub fn pad_pow2_left(series: &[f64]) -> Vec<f64> {
    let target = series.len().next_power_of_two();
    let mut out = vec![0.0; target - series.len()];
    out.extend_from_slice(series);
    out
}

/// Orthonormal Haar DWT of a power-of-two signal.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarDecomposition {
    /// `details[j - 1]` holds the `2^{J−j}` coefficients of octave `j`.
    pub details: Vec<Vec<f64>>,
    /// The single coarsest approximation coefficient.
    pub approximation: f64,
}

impl HaarDecomposition {
    pub fn octaves(&self) -> usize {
        self.details.len()
    }

    pub fn octave(&self, j: usize) -> &[f64] {
        &self.details[j - 1]
    }
}

/// Full Haar cascade; `d = (s[2k] − s[2k+1]) / √2`, `a = (s[2k] + s[2k+1]) / √2`.
pub fn haar_detail_coefficients(series: &[f64]) -> Result<HaarDecomposition, HurstError> {
    let n = series.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(HurstError::NotPowerOfTwo(n));
    }
    let mut details = Vec::with_capacity(n.trailing_zeros() as usize);
    let mut approx = series.to_vec();
    while approx.len() > 1 {
        let (next, detail): (Vec<f64>, Vec<f64>) = approx
            .chunks_exact(2)
            .map(|p| ((p[0] + p[1]) * FRAC_1_SQRT_2, (p[0] - p[1]) * FRAC_1_SQRT_2))
            .unzip();
        details.push(detail);
        approx = next;
    }
    Ok(HaarDecomposition { details, approximation: approx[0] })
}

/// Ordinary least squares of `y` on `x`, returning `(slope, slope standard error)`.
fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, se)
}

pub fn estimate_hurst(series: &[f64]) -> Result<HurstEstimate, HurstError> {
    if series.len() < MIN_LENGTH {
        return Err(HurstError::TooShort(series.len()));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(HurstError::NonFinite);
    }
    let padded = pad_pow2_left(series);
    let dwt = haar_detail_coefficients(&padded)?;

    let j_max = (1..=dwt.octaves())
        .take_while(|&j| dwt.octave(j).len() >= MIN_COEFFICIENTS)
        .last()
        .unwrap_or(0);
    if j_max < MIN_OCTAVES {
        return Err(HurstError::TooFewOctaves(j_max));
    }

    let mut xs = Vec::with_capacity(j_max);
    let mut ys = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let d = dwt.octave(j);
        let var = d.iter().map(|c| c * c).sum::<f64>() / d.len() as f64;
        if var <= 0.0 {
            return Err(HurstError::DegenerateOctave(j));
        }
        xs.push(j as f64);
        ys.push(var.log2());
    }
    let (slope, slope_se) = ols_slope(&xs, &ys);
    Ok(HurstEstimate {
        h: (slope - 1.0) / 2.0,
        dh: slope_se / 2.0,
        octaves_used: (1, j_max),
        slope,
        n_padded: padded.len(),
    })
}

/// Hurst track over every step-1 window of `window` prices, tagged with each
/// window's start date. `window` must be a power of two of at least
/// [`MIN_LENGTH`]. Windows are estimated in parallel; output order
/// follows the window index.
pub fn sliding_hurst(
    series: &PriceSeries,
    window: usize,
) -> Result<Vec<(NaiveDate, HurstEstimate)>, HurstError> {
    if window < MIN_LENGTH {
        return Err(HurstError::TooShort(window));
    }
    if !window.is_power_of_two() {
        return Err(HurstError::NotPowerOfTwo(window));
    }
    let windows: Vec<(usize, &[f64])> = sliding_windows(series.prices(), window, 1)?.collect();
    windows
        .into_par_iter()
        .map(|(start, w)| Ok((series.dates()[start], estimate_hurst(w)?)))
        .collect()
}

pub fn sliding_track_csv(track: &[(NaiveDate, HurstEstimate)]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("start_date,h,dh\n");
    for (d, est) in track {
        let _ = writeln!(out, "{},{},{}", d.format("%Y-%m-%d"), est.h, est.dh);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding() {
        let p = pad_pow2_left(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(p, vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let v: Vec<f64> = (0..1024).map(f64::from).collect();
        assert_eq!(pad_pow2_left(&v), v);
        let v = vec![1.0; 2028];
        let p = pad_pow2_left(&v);
        assert_eq!(p.len(), 2048);
        assert!(p[..20].iter().all(|&x| x == 0.0));
        assert!(p[20..].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn haar_constant_annihilated() {
        let dwt = haar_detail_coefficients(&[3.5; 64]).unwrap();
        assert!(dwt.details.iter().flatten().all(|&c| c == 0.0));
    }

    #[test]
    fn haar_alternating() {
        let x = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let dwt = haar_detail_coefficients(&x).unwrap();
        let s2 = std::f64::consts::SQRT_2;
        assert_eq!(dwt.octaves(), 3);
        assert!(dwt.octave(1).iter().all(|c| (c - s2).abs() < 1e-15));
        assert!(dwt.octave(2).iter().chain(dwt.octave(3)).all(|&c| c == 0.0));
        assert_eq!(dwt.approximation, 0.0);
    }

    #[test]
    fn haar_sizes_and_errors() {
        let dwt = haar_detail_coefficients(&vec![1.0; 256]).unwrap();
        let sizes: Vec<usize> = dwt.details.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![128, 64, 32, 16, 8, 4, 2, 1]);
        assert_eq!(sizes.iter().sum::<usize>(), 255);
        assert_eq!(haar_detail_coefficients(&[1.0; 12]), Err(HurstError::NotPowerOfTwo(12)));
    }

    #[test]
    fn octave_range() {
        let x: Vec<f64> = (0..2028).map(|i| ((i * 7919) % 101) as f64).collect();
        let est = estimate_hurst(&x).unwrap();
        assert_eq!(est.n_padded, 2048);
        assert_eq!(est.octaves_used, (1, 8));
        let est = estimate_hurst(&x[..64]).unwrap();
        assert_eq!(est.octaves_used, (1, 3));
        assert!(est.dh >= 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(estimate_hurst(&[1.0; 63]), Err(HurstError::TooShort(63)));
        assert_eq!(estimate_hurst(&[1.0; 128]), Err(HurstError::DegenerateOctave(1)));
        let mut x = vec![1.0; 128];
        x[5] = f64::NAN;
        assert_eq!(estimate_hurst(&x), Err(HurstError::NonFinite));
    }

    #[test]
    fn ols_exact_line() {
        let (a, se) = ols_slope(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]);
        assert!((a - 2.0).abs() < 1e-14);
        assert!(se < 1e-7);
    }

    #[test]
    fn ols_standard_error_by_hand() {
        // residuals (0.5, -1, 0.5) around slope 1, intercept 0.5 at x = 1,2,3
        let (a, se) = ols_slope(&[1.0, 2.0, 3.0], &[2.0, 1.5, 4.0]);
        assert!((a - 1.0).abs() < 1e-14);
        // rss = 1.5, sxx = 2, se = sqrt(1.5 / 1 / 2)
        assert!((se - 0.75f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn window_counts() {
        use crate::market_data::{fill_gaps, PriceSeries};
        let start = NaiveDate::from_ymd_opt(2011, 12, 18).unwrap();
        let n = 2028;
        let dates: Vec<NaiveDate> = (0..n).map(|i| start + chrono::Days::new(i as u64)).collect();
        let prices: Vec<f64> = (0..n).map(|i| 10.0 + ((i * 37) % 23) as f64).collect();
        let s = fill_gaps(&PriceSeries::new(dates, prices).unwrap());
        let t512 = sliding_hurst(&s, 512).unwrap();
        assert_eq!(t512.len(), 1517);
        assert_eq!(t512[0].0, start);
        assert_eq!(sliding_hurst(&s, 1024).unwrap().len(), 1005);
        assert_eq!(sliding_hurst(&s.truncate_to(s.dates()[1023]).unwrap(), 1024).unwrap().len(), 1);
        assert_eq!(sliding_hurst(&s, 1000), Err(HurstError::NotPowerOfTwo(1000)));
        assert!(matches!(sliding_hurst(&s, 4096), Err(HurstError::Window(_))));
        let csv = sliding_track_csv(&t512);
        assert_eq!(csv.lines().count(), 1518);
        assert!(csv.starts_with("start_date,h,dh\n2011-12-18,"));
    }
}
