//! Causal linear processes and the FARIMA(0, d, 0) filter.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use statrs::function::gamma::gamma;

use super::{Generator, Model, ProcessSpec, Source};
use crate::error::{Error, Result};
use crate::series::Series;

/// Filters with at most this many taps are applied directly.
const DIRECT_TAPS: usize = 128;

fn check_d(d: f64) -> Result<()> {
    if d > 0.0 && d < 0.5 {
        Ok(())
    } else {
        Err(Error::invalid("farima.d", format!("must lie in (0, 1/2), got {d}")))
    }
}

/// MA(∞) coefficients `a_0..a_M` of `(1 - L)^{-d}`.
pub fn farima_coefficients(d: f64, m: usize) -> Result<Vec<f64>> {
    check_d(d)?;
    let mut a = Vec::with_capacity(m + 1);
    a.push(1.0);
    for j in 1..=m {
        let prev = a[j - 1];
        a.push(prev * (j as f64 - 1.0 + d) / j as f64);
    }
    Ok(a)
}

/// Default truncation `max(5000, 5n)`.
pub fn farima_truncation(n: usize) -> usize {
    (5 * n).max(5000)
}

/// Exact autocovariances `γ_0..γ_{max_lag}` of FARIMA(0, d, 0) with unit
/// innovation variance.
pub fn farima_autocovariance(d: f64, max_lag: usize) -> Result<Vec<f64>> {
    check_d(d)?;
    let g1 = gamma(1.0 - d);
    let mut g = Vec::with_capacity(max_lag + 1);
    g.push(gamma(1.0 - 2.0 * d) / (g1 * g1));
    for j in 1..=max_lag {
        let jf = j as f64;
        let prev = g[j - 1];
        g.push(prev * (jf - 1.0 + d) / (jf - d));
    }
    Ok(g)
}

/// `c_0` in `γ_j ∼ c_0 j^{2d-1}`.
pub fn farima_decay_constant(d: f64) -> Result<f64> {
    check_d(d)?;
    Ok(gamma(1.0 - 2.0 * d) / (gamma(d) * gamma(1.0 - d)))
}

/// Variance lost by truncating the MA(∞) filter after lag `m`.
pub fn farima_tail_variance(d: f64, m: usize) -> Result<f64> {
    let total = farima_autocovariance(d, 0)?[0];
    let kept: f64 = farima_coefficients(d, m)?.iter().map(|a| a * a).sum();
    Ok((total - kept).max(0.0))
}

/// `X_k = Σ_{j=0}^{M} a_j ε_{k-j}` for `k = 0..n`, consuming `n + M`
/// innovations (the first `M` are pre-sample).
#[derive(Clone)]
pub struct LinearFilter {
    coeffs: Vec<f64>,
    n: usize,
    fft: Option<FftPlan>,
}

#[derive(Clone)]
struct FftPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
}

impl std::fmt::Debug for LinearFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearFilter")
            .field("taps", &self.coeffs.len())
            .field("n", &self.n)
            .field("fft", &self.fft.is_some())
            .finish()
    }
}

impl LinearFilter {
    pub fn new(coeffs: Vec<f64>, n: usize) -> Self {
        let taps = coeffs.len();
        let fft = (taps > DIRECT_TAPS).then(|| {
            let size = (n + taps - 1).next_power_of_two();
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let mut spectrum: Vec<Complex<f64>> = coeffs
                .iter()
                .map(|&a| Complex::new(a, 0.0))
                .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                .take(size)
                .collect();
            forward.process(&mut spectrum);
            FftPlan {
                forward,
                inverse,
                spectrum,
            }
        });
        LinearFilter { coeffs, n, fft }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn input_len(&self) -> usize {
        self.n + self.coeffs.len() - 1
    }

    pub fn apply(&self, eps: &[f64]) -> Vec<f64> {
        assert_eq!(eps.len(), self.input_len(), "innovation length mismatch");
        let m = self.coeffs.len() - 1;
        match &self.fft {
            None => (0..self.n)
                .map(|k| {
                    self.coeffs
                        .iter()
                        .enumerate()
                        .map(|(j, a)| a * eps[k + m - j])
                        .sum()
                })
                .collect(),
            Some(plan) => {
                let size = plan.spectrum.len();
                let mut buf: Vec<Complex<f64>> = eps
                    .iter()
                    .map(|&e| Complex::new(e, 0.0))
                    .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                    .take(size)
                    .collect();
                plan.forward.process(&mut buf);
                for (b, s) in buf.iter_mut().zip(&plan.spectrum) {
                    *b *= s;
                }
                plan.inverse.process(&mut buf);
                let scale = 1.0 / size as f64;
                // Wrap-around only reaches indices below m.
                buf[m..m + self.n].iter().map(|c| c.re * scale).collect()
            }
        }
    }
}

/// A linear MA or FARIMA series of length `n`, seeded by `spec.seed`.
pub fn simulate_linear(spec: &ProcessSpec, n: usize) -> Result<Series> {
    if !matches!(spec.model, Model::LinearMa { .. } | Model::Farima { .. }) {
        return Err(Error::invalid("model", "simulate_linear needs linear_ma or farima"));
    }
    let source = Source::Process(spec.clone());
    Series::new(Generator::new(&source, n)?.replicate(spec.seed, 0))
}
