//! Exact fractional Gaussian noise.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;

/// Largest `n` for the dense factorization.
pub const DEFAULT_DENSE_CAP: usize = 4096;

fn check_hurst(h: f64) -> Result<()> {
    if (0.5..1.0).contains(&h) {
        Ok(())
    } else {
        Err(Error::invalid("fgn.hurst", format!("must lie in [1/2, 1), got {h}")))
    }
}

/// `γ_j = ((j+1)^{2H} - 2 j^{2H} + |j-1|^{2H}) / 2`.
pub fn fgn_autocovariance(hurst: f64, lag: usize) -> Result<f64> {
    check_hurst(hurst)?;
    Ok(acov(hurst, lag))
}

fn acov(h: f64, lag: usize) -> f64 {
    if lag == 0 {
        return 1.0;
    }
    let e = 2.0 * h;
    let j = lag as f64;
    0.5 * ((j + 1.0).powf(e) - 2.0 * j.powf(e) + (j - 1.0).powf(e))
}

/// `c_0 = H(2H - 1)` in `γ_j ∼ c_0 j^{2H-2}`.
pub fn fgn_decay_constant(hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    Ok(hurst * (2.0 * hurst - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FgnMethod {
    /// Dense Cholesky factor of the covariance matrix, `n` up to a cap.
    #[default]
    Cholesky,
    /// Circulant embedding of size `2n`; exact and `O(n log n)`.
    Circulant,
}

/// Fractional Gaussian noise sampler prepared for a fixed length.
#[derive(Clone)]
pub struct FgnGenerator {
    hurst: f64,
    n: usize,
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    Dense(DMatrix<f64>),
    Circulant {
        fft: Arc<dyn Fft<f64>>,
        scale: Vec<f64>,
    },
}

impl std::fmt::Debug for FgnGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FgnGenerator")
            .field("hurst", &self.hurst)
            .field("n", &self.n)
            .field("method", &self.method())
            .finish()
    }
}

impl FgnGenerator {
    pub fn new(hurst: f64, n: usize, method: FgnMethod) -> Result<Self> {
        FgnGenerator::with_cap(hurst, n, method, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(hurst: f64, n: usize, method: FgnMethod, cap: usize) -> Result<Self> {
        check_hurst(hurst)?;
        if n == 0 {
            return Err(Error::invalid("n", "series length must be positive"));
        }
        let kind = match method {
            FgnMethod::Cholesky => {
                if n > cap {
                    return Err(Error::invalid(
                        "n",
                        format!("dense fGn factorization is capped at {cap}, got {n}; use the circulant method"),
                    ));
                }
                let cov = DMatrix::from_fn(n, n, |i, j| acov(hurst, i.abs_diff(j)));
                let chol = cov.cholesky().ok_or(Error::Factorization { n })?;
                Kind::Dense(chol.unpack())
            }
            FgnMethod::Circulant => {
                let m = 2 * n;
                let mut row: Vec<Complex<f64>> = (0..m)
                    .map(|k| {
                        let lag = if k <= n { k } else { m - k };
                        Complex::new(acov(hurst, lag), 0.0)
                    })
                    .collect();
                let fft = FftPlanner::new().plan_fft_forward(m);
                fft.process(&mut row);
                let top = row.iter().map(|c| c.re).fold(0.0, f64::max);
                let mut scale = Vec::with_capacity(m);
                for c in &row {
                    if c.re < -1e-9 * top {
                        return Err(Error::Factorization { n });
                    }
                    scale.push((c.re.max(0.0) / m as f64).sqrt());
                }
                Kind::Circulant { fft, scale }
            }
        };
        Ok(FgnGenerator { hurst, n, kind })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn method(&self) -> FgnMethod {
        match self.kind {
            Kind::Dense(_) => FgnMethod::Cholesky,
            Kind::Circulant { .. } => FgnMethod::Circulant,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.kind {
            Kind::Dense(l) => {
                let z = DVector::from_fn(self.n, |_, _| StandardNormal.sample(rng));
                (l * z).iter().copied().collect()
            }
            Kind::Circulant { fft, scale } => {
                let mut w: Vec<Complex<f64>> = scale
                    .iter()
                    .map(|s| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut w);
                w[..self.n].iter().map(|c| c.re).collect()
            }
        }
    }
}

/// Dense-factorization fGn of length `n ≤ 4096`.
pub fn simulate_fgn(hurst: f64, n: usize, seed: u64) -> Result<Series> {
    let g = FgnGenerator::new(hurst, n, FgnMethod::Cholesky)?;
    Series::new(g.sample(&mut super::substream(seed, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::substream;

    #[test]
    fn covariance_values() {
        assert_eq!(fgn_autocovariance(0.5, 0).unwrap(), 1.0);
        for j in 1..20 {
            assert!(fgn_autocovariance(0.5, j).unwrap().abs() < 1e-12);
        }
        let g1 = fgn_autocovariance(0.85, 1).unwrap();
        assert!((g1 - (2f64.powf(1.7) - 2.0) / 2.0).abs() < 1e-15);
        assert!((g1 - 0.6245).abs() < 1e-4);
        let j = 10_000usize;
        let scaled = fgn_autocovariance(0.85, j).unwrap() * (j as f64).powf(0.3);
        let c0 = fgn_decay_constant(0.85).unwrap();
        assert!((scaled - c0).abs() / c0 < 0.02);
        assert!(fgn_autocovariance(1.0, 1).is_err());
        assert!(fgn_autocovariance(0.4, 1).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(FgnGenerator::with_cap(0.8, 65, FgnMethod::Cholesky, 64).is_err());
        assert!(FgnGenerator::with_cap(0.8, 65, FgnMethod::Circulant, 64).is_ok());
    }

    #[test]
    fn exact_methods_have_the_target_covariance() {
        // Second moments of both samplers against the oracle.
        let (h, n, reps) = (0.85, 64, 4000);
        for method in [FgnMethod::Cholesky, FgnMethod::Circulant] {
            let g = FgnGenerator::new(h, n, method).unwrap();
            let mut rng = substream(17, 0);
            let mut m = [0.0f64; 3];
            for _ in 0..reps {
                let x = g.sample(&mut rng);
                m[0] += x[10] * x[10];
                m[1] += x[10] * x[11];
                m[2] += x[0] * x[n - 1];
            }
            let want = [1.0, acov(h, 1), acov(h, n - 1)];
            for (got, want) in m.iter().map(|v| v / reps as f64).zip(want) {
                assert!((got - want).abs() < 0.06, "{method:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn partial_sum_variance_scales() {
        let (h, n, reps) = (0.85, 256, 2000);
        let g = FgnGenerator::new(h, n, FgnMethod::Cholesky).unwrap();
        let mut rng = substream(3, 0);
        let var = (0..reps)
            .map(|_| g.sample(&mut rng).iter().sum::<f64>().powi(2))
            .sum::<f64>()
            / reps as f64;
        let target = (n as f64).powf(2.0 * h);
        assert!((var - target).abs() / target < 0.05 + 3.0 * (2.0 / reps as f64).sqrt(), "{var} vs {target}");
    }

    #[test]
    fn lag_one_product() {
        let (h, n, reps) = (0.85, 512, 2000);
        let g = FgnGenerator::new(h, n, FgnMethod::Cholesky).unwrap();
        let mut rng = substream(5, 0);
        let mut acc = 0.0;
        for _ in 0..reps {
            let x = g.sample(&mut rng);
            acc += x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1) as f64;
        }
        let got = acc / reps as f64;
        assert!((got - 0.6245).abs() < 0.02, "{got}");
    }

    #[test]
    fn half_is_white_noise() {
        let x = simulate_fgn(0.5, 4000, 1).unwrap();
        let v = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
        assert!((v - 1.0).abs() < 0.1);
    }
}
