//! Autocovariances, the Bartlett long-run variance, CUSUM statistics and the
//! split test `M_n`.
//!
//! Every function takes a plain slice so that segments of a larger series can
//! be tested without copying; [`crate::Series`] is the validated owner.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::asymptotics::BandwidthRule;
use crate::error::{Error, Result};
use crate::sum::{mean, Compensated};

/// Sample autocovariance `γ̂_j` with divisor `n` and the full-sample mean.
pub fn sample_autocovariance(x: &[f64], lag: usize) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::TooShort { min: 1, got: 0 });
    }
    if lag >= x.len() {
        return Err(Error::LagOutOfRange { lag, n: x.len() });
    }
    let centered = demeaned(x);
    Ok(lagged_product(&centered, lag))
}

pub(crate) fn demeaned(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|v| v - m).collect()
}

/// `(1/n) Σ_{i < n-lag} c_i c_{i+lag}` on an already centered slice.
fn lagged_product(centered: &[f64], lag: usize) -> f64 {
    let mut acc = Compensated::default();
    for (a, b) in centered.iter().zip(&centered[lag..]) {
        acc.add(a * b);
    }
    acc.value() / centered.len() as f64
}

/// Which family produced a set of lag weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Bartlett,
    Custom,
}

/// Lag weights `ω_1(q)..ω_q(q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    kind: KernelKind,
    weights: Vec<f64>,
}

impl KernelWeights {
    /// Bartlett weights `ω_j(q) = 1 - j/(q+1)`.
    pub fn bartlett(q: usize) -> Self {
        let denom = (q + 1) as f64;
        KernelWeights {
            kind: KernelKind::Bartlett,
            weights: (1..=q).map(|j| 1.0 - j as f64 / denom).collect(),
        }
    }

    /// Arbitrary weights; each must lie in `[0, 1]`.
    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if let Some((j, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(0.0..=1.0).contains(*w))
        {
            return Err(Error::invalid(
                "kernel.weights",
                format!("ω_{} = {w} outside [0, 1]", j + 1),
            ));
        }
        Ok(KernelWeights {
            kind: KernelKind::Custom,
            weights,
        })
    }

    pub fn q(&self) -> usize {
        self.weights.len()
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub fn bartlett_weights(q: usize) -> KernelWeights {
    KernelWeights::bartlett(q)
}

type WeightFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

/// A lag-window family: produces weights for whatever bandwidth a segment needs.
///
/// Custom families are expected to satisfy `ω_j(q) ∈ [0, 1]`, `ω_j(q) = 0`
/// for `j > q` and `ω_j(q) → 1` as `q → ∞` for each fixed `j`.
#[derive(Clone, Default)]
pub enum Kernel {
    #[default]
    Bartlett,
    /// `weight(j, q)` for `1 ≤ j ≤ q`.
    Custom(Arc<WeightFn>),
}

impl Kernel {
    pub fn custom(weight: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        Kernel::Custom(Arc::new(weight))
    }

    pub fn weights(&self, q: usize) -> Result<KernelWeights> {
        match self {
            Kernel::Bartlett => Ok(KernelWeights::bartlett(q)),
            Kernel::Custom(f) => KernelWeights::custom((1..=q).map(|j| f(j, q)).collect()),
        }
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            Kernel::Bartlett => KernelKind::Bartlett,
            Kernel::Custom(_) => KernelKind::Custom,
        }
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Bartlett => f.write_str("Bartlett"),
            Kernel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A long-run variance estimate `s²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRunVarianceEstimate {
    pub value: f64,
    pub q_used: usize,
    pub kernel: KernelKind,
    /// Values at or below this are indistinguishable from rounding noise.
    pub zero_tolerance: f64,
}

impl LongRunVarianceEstimate {
    /// `s`, or [`Error::ZeroVariance`] if the estimate is numerically zero.
    pub fn std_dev(&self) -> Result<f64> {
        if self.value <= self.zero_tolerance {
            Err(Error::ZeroVariance)
        } else {
            Ok(self.value.sqrt())
        }
    }
}

/// `s² = γ̂_0 + 2 Σ_{j=1..q} ω_j γ̂_j`, with `q` the length of `kernel`.
///
/// Applied to a prefix or suffix this is the segment estimator: the
/// segment's own mean is subtracted and every lagged product stays inside
/// the segment.
pub fn long_run_variance(x: &[f64], kernel: &KernelWeights) -> Result<LongRunVarianceEstimate> {
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { min: 2, got: n });
    }
    let q = kernel.q();
    if q > n - 1 {
        return Err(Error::BandwidthOutOfRange { q, n });
    }
    let centered = demeaned(x);
    let gamma0 = lagged_product(&centered, 0);
    let mut acc = Compensated::default();
    acc.add(gamma0);
    for (j, w) in kernel.weights().iter().enumerate() {
        if *w != 0.0 {
            acc.add(2.0 * w * lagged_product(&centered, j + 1));
        }
    }
    let mut value = acc.value();

    let magnitude = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 64.0 * f64::EPSILON * magnitude;
    let zero_tolerance = noise * noise * (2 * q + 1) as f64;
    let negative_slack = (1e-12 * gamma0).max(zero_tolerance);

    match kernel.kind() {
        // Positive semidefinite: anything negative is rounding.
        KernelKind::Bartlett => value = value.max(0.0),
        KernelKind::Custom if value < -negative_slack => {
            return Err(Error::NegativeVariance { value });
        }
        KernelKind::Custom => {}
    }

    Ok(LongRunVarianceEstimate {
        value,
        q_used: q,
        kernel: kernel.kind(),
        zero_tolerance,
    })
}

/// `D_k = |S_k - (k/n) S_n|` for `k = 1..n`.
pub fn cusum_profile(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let total = crate::sum::sum(x.iter().copied());
    let mut acc = Compensated::default();
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            acc.add(*v);
            let k = i + 1;
            let share = if k == n {
                total
            } else {
                total * k as f64 / n as f64
            };
            (acc.value() - share).abs()
        })
        .collect()
}

/// Leftmost maximizer (one-based) and the maximum of a profile.
fn first_argmax(profile: &[f64]) -> (usize, f64) {
    let mut best = (1, profile[0]);
    for (i, &d) in profile.iter().enumerate().skip(1) {
        if d > best.1 {
            best = (i + 1, d);
        }
    }
    best
}

/// The smallest `k` at which the CUSUM profile attains its maximum.
pub fn changepoint_estimator(x: &[f64]) -> Result<usize> {
    if x.len() < 2 {
        return Err(Error::TooShort {
            min: 2,
            got: x.len(),
        });
    }
    Ok(first_argmax(&cusum_profile(x)).0)
}

/// CUSUM statistic, its argmax and `s`, computed in one pass over the profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cusum {
    pub statistic: f64,
    pub khat: usize,
    pub s: f64,
    pub q: usize,
}

pub(crate) fn cusum(x: &[f64], kernel: &KernelWeights) -> Result<Cusum> {
    let estimate = long_run_variance(x, kernel)?;
    let s = estimate.std_dev()?;
    let (khat, peak) = first_argmax(&cusum_profile(x));
    Ok(Cusum {
        statistic: peak / ((x.len() as f64).sqrt() * s),
        khat,
        s,
        q: estimate.q_used,
    })
}

/// `T_n = max_k D_k / (√n s_n)` with Bartlett bandwidth `q`.
pub fn cusum_statistic(x: &[f64], q: usize) -> Result<f64> {
    Ok(cusum(x, &KernelWeights::bartlett(q))?.statistic)
}

/// `(q/n)^{H-1/2} T_n`, the normalization that stabilizes `T_n` under long memory.
///
/// `H = 1/2` is accepted and returns `T_n` itself.
pub fn scaled_statistic(x: &[f64], q: usize, hurst: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&hurst) {
        return Err(Error::invalid("hurst", format!("must lie in [1/2, 1), got {hurst}")));
    }
    let t = cusum_statistic(x, q)?;
    Ok((q as f64 / x.len() as f64).powf(hurst - 0.5) * t)
}

/// Configuration shared by the split test and segmentation.
#[derive(Debug, Clone)]
pub struct SplitConfig {
    pub bandwidth: BandwidthRule,
    /// Minimum length of either side of a split.
    pub min_seg: usize,
    pub kernel: Kernel,
}

pub const DEFAULT_MIN_SEG: usize = 20;

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            bandwidth: BandwidthRule::default(),
            min_seg: DEFAULT_MIN_SEG,
            kernel: Kernel::Bartlett,
        }
    }
}

impl SplitConfig {
    pub fn new(bandwidth: BandwidthRule, min_seg: usize) -> Self {
        SplitConfig {
            bandwidth,
            min_seg,
            kernel: Kernel::Bartlett,
        }
    }

    /// Shortest segment any statistic is computed on.
    pub fn min_len(&self) -> usize {
        self.min_seg.max(2)
    }

    /// CUSUM statistic of a segment with bandwidth `q(len)`.
    pub(crate) fn segment_cusum(&self, x: &[f64]) -> Result<Cusum> {
        let q = self.bandwidth.bandwidth(x.len()).q;
        cusum(x, &self.kernel.weights(q)?)
    }
}

/// Outcome of the split test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitTestResult {
    pub n: usize,
    pub khat: usize,
    pub t1: f64,
    pub t2: f64,
    pub s1: f64,
    pub s2: f64,
    pub mn: f64,
    pub q1: usize,
    pub q2: usize,
}

/// `M_n = max(T_{n,1}, T_{n,2})` around the CUSUM change-point estimate.
pub fn split_statistics(x: &[f64], config: &SplitConfig) -> Result<SplitTestResult> {
    config.bandwidth.validate()?;
    let n = x.len();
    let min = config.min_len();
    if n < 2 * min {
        return Err(Error::SegmentTooShort { lo: 0, hi: n, min });
    }
    let khat = changepoint_estimator(x)?;
    if khat < min || n - khat < min {
        return Err(Error::SegmentTooShort { lo: 0, hi: n, min });
    }
    let first = config.segment_cusum(&x[..khat])?;
    let second = config.segment_cusum(&x[khat..])?;
    Ok(SplitTestResult {
        n,
        khat,
        t1: first.statistic,
        t2: second.statistic,
        s1: first.s,
        s2: second.s,
        mn: first.statistic.max(second.statistic),
        q1: first.q,
        q2: second.q,
    })
}
