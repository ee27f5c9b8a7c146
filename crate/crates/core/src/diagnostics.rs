//! Plot-ready autocorrelation and periodogram tables.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::sample_autocovariance;

pub const DEFAULT_WINDOW: usize = 21;
pub const DEFAULT_MAX_LAG: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcfRow {
    pub lag: usize,
    pub acf: f64,
}

/// Periodogram at the Fourier frequency `λ_j = 2πj/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramRow {
    pub j: usize,
    pub frequency: f64,
    pub raw: f64,
    pub smoothed: f64,
    pub log10_frequency: f64,
    /// `None` where the ordinate is not positive.
    pub log10_raw: Option<f64>,
    pub log10_smoothed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub max_lag: usize,
    pub window: usize,
    /// The input is constant: autocorrelations beyond lag 0 are reported as
    /// zero and the periodogram vanishes.
    pub degenerate: bool,
    pub acf: Vec<AcfRow>,
    pub periodogram: Vec<PeriodogramRow>,
}

fn positive_log10(v: f64) -> Option<f64> {
    (v > 0.0).then(|| v.log10())
}

/// `I(λ_j) = |Σ_t x_t e^{-itλ_j}|² / (2πn)` for `j = 1..⌊n/2⌋`.
pub fn periodogram(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (2.0 * std::f64::consts::PI * n as f64);
    buf[1..=n / 2].iter().map(|c| c.norm_sqr() * scale).collect()
}

/// Centered moving average over an odd `window`, shrunk symmetrically near
/// the edges.
pub fn moving_average(v: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..v.len())
        .map(|i| {
            let h = half.min(i).min(v.len() - 1 - i);
            let slice = &v[i - h..=i + h];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

pub fn diagnostics(x: &[f64], max_lag: usize, window: usize) -> Result<Diagnostics> {
    let n = x.len();
    if n < 4 {
        return Err(Error::TooShort { min: 4, got: n });
    }
    if max_lag >= n {
        return Err(Error::LagOutOfRange { lag: max_lag, n });
    }
    if window == 0 || window % 2 == 0 {
        return Err(Error::invalid("window", format!("must be a positive odd number, got {window}")));
    }
    let frequencies = n / 2;
    if window > frequencies {
        return Err(Error::invalid(
            "window",
            format!("{window} exceeds the {frequencies} available Fourier frequencies"),
        ));
    }

    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = lo == hi;

    let acf = if degenerate {
        (0..=max_lag)
            .map(|lag| AcfRow {
                lag,
                acf: if lag == 0 { 1.0 } else { 0.0 },
            })
            .collect()
    } else {
        let g0 = sample_autocovariance(x, 0)?;
        (0..=max_lag)
            .map(|lag| {
                Ok(AcfRow {
                    lag,
                    acf: sample_autocovariance(x, lag)? / g0,
                })
            })
            .collect::<Result<_>>()?
    };

    let raw = if degenerate {
        vec![0.0; frequencies]
    } else {
        periodogram(x)
    };
    let smoothed = moving_average(&raw, window);
    let periodogram = raw
        .iter()
        .zip(&smoothed)
        .enumerate()
        .map(|(i, (&r, &s))| {
            let j = i + 1;
            let frequency = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            PeriodogramRow {
                j,
                frequency,
                raw: r,
                smoothed: s,
                log10_frequency: frequency.log10(),
                log10_raw: positive_log10(r),
                log10_smoothed: positive_log10(s),
            }
        })
        .collect();

    Ok(Diagnostics {
        n,
        max_lag,
        window,
        degenerate,
        acf,
        periodogram,
    })
}

impl Diagnostics {
    /// Least-squares slope of `log I(λ_j)` against `log λ_j` over the lowest
    /// `fraction` of Fourier frequencies.
    pub fn low_frequency_slope(&self, fraction: f64) -> Option<f64> {
        let m = ((self.periodogram.len() as f64 * fraction).floor() as usize).max(2);
        let pts: Vec<(f64, f64)> = self
            .periodogram
            .iter()
            .take(m)
            .filter_map(|r| r.log10_raw.map(|y| (r.log10_frequency, y)))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}
